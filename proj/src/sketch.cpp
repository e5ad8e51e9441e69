#include "mersenne/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "mersenne/bucketing.hpp"
#include "mersenne/prng.hpp"

namespace mersenne {

SignIndexPair split_pow2(u128 h, unsigned b, unsigned l) {
    assert(b >= 2 && b <= 127 && l < b);
    assert(h < (u128(1) << b));
    u128 i = h & ((u128(1) << l) - 1);
    int a = int(h >> (b - 1));
    return {i, 1 - 2 * a};
}

SignIndexPair split_arb_uniform(u128 h, unsigned b, u128 r) {
    assert(b >= 2 && b <= 127);
    assert(h < (u128(1) << b));
    assert(r >= 1 && r <= (u128(1) << (b - 1)));
    u128 j = h & ((u128(1) << (b - 1)) - 1);
    u128 i = map_pow2(j, b - 1, r);
    int a = int(h >> (b - 1));
    return {i, 2 * a - 1};
}

SignIndexPair split_arb_mersenne(u128 h, unsigned b, u128 r) {
    assert(h < (u128(1) << b) - 1);
    return split_arb_uniform(h + 1, b, r);
}

namespace {

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void append_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

uint32_t read_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    return v;
}

uint64_t read_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
}

constexpr char kMagic[5] = {'M', 'C', 'S', 'K', '1'};

unsigned log2_pow2(u128 v) {
    u64 hi = u64(v >> 64);
    if (hi) return 64 + unsigned(63 - std::countl_zero(hi));
    return unsigned(63 - std::countl_zero(u64(v)));
}

}  // namespace

CountSketch::CountSketch(unsigned rows, u64 width, const MersenneModulus& modulus,
                         u128 key_domain, Splitter splitter, u64 seed, unsigned independence)
    : width_(width), splitter_(splitter) {
    if (rows == 0) throw std::invalid_argument("need at least one row");
    rng::SplitMix64 g(seed);
    families_.reserve(rows);
    seeds_.reserve(rows);
    for (unsigned row = 0; row < rows; ++row) {
        u64 s = g.next();
        seeds_.push_back(s);
        families_.emplace_back(modulus, independence, key_domain, s);
    }
    validate();
    counters_.assign(size_t(rows) * width_, 0);
}

CountSketch::CountSketch(u64 width, Splitter splitter, std::vector<PolyHashFamily> families)
    : width_(width), splitter_(splitter), families_(std::move(families)) {
    if (families_.empty()) throw std::invalid_argument("need at least one row");
    for (const PolyHashFamily& f : families_) {
        if (f.modulus().b() != families_.front().modulus().b() ||
            f.key_domain() != families_.front().key_domain()) {
            throw std::invalid_argument("rows must share modulus and key domain");
        }
    }
    validate();
    counters_.assign(families_.size() * width_, 0);
}

void CountSketch::validate() const {
    const unsigned b = modulus().b();
    if (width_ < 2) throw std::invalid_argument("width must be at least 2");
    switch (splitter_) {
        case Splitter::Pow2:
            if ((width_ & (width_ - 1)) != 0 || width_ >= (u128(1) << b)) {
                throw std::invalid_argument(
                    "width must be a power of two strictly inside the hash range");
            }
            break;
        case Splitter::UniformArb:
        case Splitter::MersenneArb:
            if (u128(width_) > (u128(1) << (b - 1))) {
                throw std::invalid_argument("width exceeds half the hash range");
            }
            break;
        default:
            throw std::invalid_argument("unknown splitter");
    }
    if (u128(families_.size()) * width_ > (u128(1) << 34)) {
        throw std::invalid_argument("sketch dimensions too large");
    }
}

SignIndexPair CountSketch::split(u128 h) const {
    const unsigned b = modulus().b();
    switch (splitter_) {
        case Splitter::Pow2:
            return split_pow2(h, b, unsigned(std::countr_zero(width_)));
        case Splitter::UniformArb:
            return split_arb_uniform(h, b, width_);
        default:
            return split_arb_mersenne(h, b, width_);
    }
}

void CountSketch::process(u128 x, i64 delta) {
    for (size_t row = 0; row < families_.size(); ++row) {
        auto [index, sign] = split(families_[row](x));
        u64 signed_delta = sign > 0 ? u64(delta) : u64(0) - u64(delta);
        i64& c = counters_[row * width_ + size_t(index)];
        c = i64(u64(c) + signed_delta);  // wrapping on purpose
    }
}

CountSketch::Moment CountSketch::row_second_moment(unsigned row) const {
    u128 sum = 0;
    bool saturated = false;
    const i64* base = counters_.data() + size_t(row) * width_;
    for (u64 i = 0; i < width_; ++i) {
        // square via the unsigned magnitude to dodge signed overflow on INT64_MIN
        u64 mag = base[i] < 0 ? u64(0) - u64(base[i]) : u64(base[i]);
        u128 sq = u128(mag) * mag;
        if (sum > ~u128(0) - sq) {
            saturated = true;
            sum = ~u128(0);
            break;
        }
        sum += sq;
    }
    return {sum, saturated};
}

CountSketch::Moment CountSketch::second_moment(bool median_rows) const {
    if (!median_rows || families_.size() == 1) return row_second_moment(0);
    std::vector<Moment> all;
    all.reserve(families_.size());
    for (unsigned row = 0; row < families_.size(); ++row) all.push_back(row_second_moment(row));
    std::sort(all.begin(), all.end(),
              [](const Moment& a, const Moment& b) { return a.value < b.value; });
    return all[(all.size() - 1) / 2];
}

i64 CountSketch::point_query(u128 x) const {
    std::vector<i64> estimates;
    estimates.reserve(families_.size());
    for (size_t row = 0; row < families_.size(); ++row) {
        auto [index, sign] = split(families_[row](x));
        i64 c = counters_[row * width_ + size_t(index)];
        estimates.push_back(sign > 0 ? c : i64(u64(0) - u64(c)));
    }
    std::sort(estimates.begin(), estimates.end());
    return estimates[(estimates.size() - 1) / 2];
}

CountSketch& CountSketch::merge(const CountSketch& other) {
    if (width_ != other.width_ || splitter_ != other.splitter_ ||
        families_.size() != other.families_.size() || seeds_ != other.seeds_ ||
        modulus().b() != other.modulus().b() || key_domain() != other.key_domain() ||
        independence() != other.independence() || seeds_.empty()) {
        throw std::invalid_argument("sketches differ in geometry or seeds");
    }
    for (size_t i = 0; i < counters_.size(); ++i) {
        counters_[i] = i64(u64(counters_[i]) + u64(other.counters_[i]));
    }
    return *this;
}

std::vector<uint8_t> CountSketch::serialize() const {
    if (seeds_.empty()) {
        throw std::logic_error("sketch with injected families cannot serialize");
    }
    std::vector<uint8_t> out;
    out.reserve(33 + 8 * seeds_.size() + 8 * counters_.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    append_u32(out, modulus().b());
    append_u32(out, rows());
    append_u64(out, width_);
    append_u32(out, independence());
    append_u32(out, uint32_t(splitter_));
    append_u32(out, log2_pow2(key_domain()));
    for (u64 s : seeds_) append_u64(out, s);
    for (i64 c : counters_) append_u64(out, u64(c));
    return out;
}

CountSketch CountSketch::deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 33 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw std::invalid_argument("malformed sketch payload");
    }
    const uint8_t* p = bytes.data() + 5;
    uint32_t b = read_u32(p);
    uint32_t d = read_u32(p + 4);
    uint64_t r = read_u64(p + 8);
    uint32_t k = read_u32(p + 16);
    uint32_t splitter = read_u32(p + 20);
    uint32_t key_bits = read_u32(p + 24);
    if (b < 2 || b > 127 || d == 0 || splitter > 2 || key_bits > 126 || k == 0) {
        throw std::invalid_argument("malformed sketch payload");
    }
    u128 expect = 33 + u128(8) * d + u128(8) * d * r;
    if (u128(bytes.size()) != expect) throw std::invalid_argument("malformed sketch payload");

    MersenneModulus modulus{unsigned(b)};
    u128 key_domain = u128(1) << key_bits;
    const uint8_t* q = bytes.data() + 33;
    std::vector<u64> seeds(d);
    std::vector<PolyHashFamily> families;
    families.reserve(d);
    for (uint32_t row = 0; row < d; ++row, q += 8) {
        seeds[row] = read_u64(q);
        families.emplace_back(modulus, k, key_domain, seeds[row]);
    }
    CountSketch sk(r, Splitter(splitter), std::move(families));
    sk.seeds_ = std::move(seeds);
    for (size_t i = 0; i < sk.counters_.size(); ++i, q += 8) sk.counters_[i] = i64(read_u64(q));
    return sk;
}

}  // namespace mersenne
