#pragma once

#include <cstdint>
#include <vector>

#include "mersenne/polyhash.hpp"

namespace mersenne {

// Bucket index plus a +/-1 sign, both carved from a single hash value.
struct SignIndexPair {
    u128 index;
    int sign;  // exactly -1 or +1
    friend bool operator==(const SignIndexPair&, const SignIndexPair&) = default;
};

// Index from the low l bits, sign from the top bit (top set -> -1).
// For h < 2^b, l < b.
SignIndexPair split_pow2(u128 h, unsigned b, unsigned l);

// Index most uniform on [r] from the low b-1 bits, sign from the top bit
// (top set -> +1).  For h uniform on [2^b], r <= 2^(b-1).
SignIndexPair split_arb_uniform(u128 h, unsigned b, u128 r);

// Same carving applied to h+1, which is uniform on [2^b] minus 0 when h is
// uniform on [2^b - 1].  Index lands most uniform on [r]; the sign keeps the
// +1-on-top convention.
SignIndexPair split_arb_mersenne(u128 h, unsigned b, u128 r);

enum class Splitter : uint32_t {
    Pow2 = 0,         // width must be a power of two
    UniformArb = 1,   // any width <= 2^(b-1)
    MersenneArb = 2,  // any width <= 2^(b-1); shifts the hash by one first
};

// Count sketch over signed 64-bit counters.  Each row derives both its bucket
// index and its sign from one polynomial hash evaluation.
class CountSketch {
public:
    // Draws one hash family per row from a master seed.
    CountSketch(unsigned rows, u64 width, const MersenneModulus& modulus, u128 key_domain,
                Splitter splitter, u64 seed, unsigned independence = 4);
    // Injects explicit families (one per row); such a sketch cannot be
    // serialized because its coefficients did not come from stored seeds.
    CountSketch(u64 width, Splitter splitter, std::vector<PolyHashFamily> families);

    void process(u128 x, i64 delta);

    // Sum of squared counters.  `saturated` reports 128-bit overflow.
    struct Moment {
        u128 value;
        bool saturated;
        friend bool operator==(const Moment&, const Moment&) = default;
    };
    Moment row_second_moment(unsigned row) const;
    // Default reads row 0; the median across rows is available behind the flag.
    Moment second_moment(bool median_rows = false) const;

    // Lower median across rows of the per-row estimate sign * counter.
    i64 point_query(u128 x) const;

    CountSketch& merge(const CountSketch& other);  // requires identical seeds

    std::vector<uint8_t> serialize() const;
    static CountSketch deserialize(const std::vector<uint8_t>& bytes);

    unsigned rows() const { return unsigned(families_.size()); }
    u64 width() const { return width_; }
    Splitter splitter() const { return splitter_; }
    const MersenneModulus& modulus() const { return families_.front().modulus(); }
    u128 key_domain() const { return families_.front().key_domain(); }
    unsigned independence() const { return families_.front().independence(); }
    const std::vector<u64>& seeds() const { return seeds_; }
    const std::vector<i64>& counters() const { return counters_; }
    i64 counter(unsigned row, u64 index) const { return counters_[row * width_ + index]; }

    friend bool operator==(const CountSketch& a, const CountSketch& b) {
        return a.width_ == b.width_ && a.splitter_ == b.splitter_ && a.seeds_ == b.seeds_ &&
               a.counters_ == b.counters_ && a.modulus().b() == b.modulus().b() &&
               a.key_domain() == b.key_domain() && a.independence() == b.independence();
    }

private:
    void validate() const;
    SignIndexPair split(u128 h) const;

    u64 width_;
    Splitter splitter_;
    std::vector<PolyHashFamily> families_;
    std::vector<u64> seeds_;  // empty when families were injected
    std::vector<i64> counters_;
};

}  // namespace mersenne
