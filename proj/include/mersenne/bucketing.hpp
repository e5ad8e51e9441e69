#pragma once

#include <vector>

#include "mersenne/field.hpp"

namespace mersenne {

// A strictly increasing list of bit positions (LSB = 0) to gather into a
// compact value.  Contiguous runs collapse to a shift/mask at call time.
class BitSelector {
public:
    explicit BitSelector(std::vector<unsigned> positions);
    BitSelector(std::initializer_list<unsigned> positions)
        : BitSelector(std::vector<unsigned>(positions)) {}

    static BitSelector low(unsigned count);                  // positions 0..count-1
    static BitSelector top(unsigned count, unsigned width);  // the top `count` of `width` bits

    const std::vector<unsigned>& positions() const { return positions_; }
    unsigned output_bits() const { return unsigned(positions_.size()); }
    bool contiguous() const { return contiguous_; }

private:
    std::vector<unsigned> positions_;
    bool contiguous_;
};

// Gathers the selected bits of y, selector position i -> output bit i.
u128 select_bits(u128 y, const BitSelector& sel);

// Bucket of v under the multiply-shift map on a full power-of-two domain:
// floor(v r / 2^b).  Preimage sizes differ by at most one.
u128 map_pow2(u128 v, unsigned b, u128 r);

// Bucket of v on the domain [2^b - 1]: floor((v+1) r / 2^b).  The +1 shift
// re-centers the truncated domain so preimage sizes differ by at most one.
u128 map_mersenne(u128 v, unsigned b, u128 r);

// Bucket of v on a domain [p], p = 2^b - c, via true division floor(v r / p).
// Exactly most uniform for every r <= p; the divider's iteration count is
// chosen at construction so v r always lies inside its proven input domain.
class ExactDivisionMap {
public:
    ExactDivisionMap(const PseudoMersenneModulus& mod, u128 r);

    u128 operator()(u128 v) const;

    const PseudoMersenneModulus& divider() const { return divider_; }
    u128 buckets() const { return r_; }

private:
    PseudoMersenneModulus divider_;
    u128 r_;
};

}  // namespace mersenne
