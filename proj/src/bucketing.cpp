#include "mersenne/bucketing.hpp"

#include <numeric>
#include <stdexcept>

namespace mersenne {

namespace {

int bits(u128 x) {
    u64 hi = u64(x >> 64);
    if (hi) return 128 - std::countl_zero(hi);
    return x ? 64 - std::countl_zero(u64(x)) : 0;
}

// v * r >> b with the product taken at full width
u128 scaled_shift(u128 v, u128 r, unsigned b) {
    if (bits(v) + bits(r) <= 128) return (v * r) >> b;
    UWide wide = wide_mul(UWide::of_u128(v), UWide::of_u128(r));
    return (wide >> b).low_u128();
}

}  // namespace

BitSelector::BitSelector(std::vector<unsigned> positions) : positions_(std::move(positions)) {
    if (positions_.empty()) throw std::invalid_argument("selector needs at least one bit");
    for (size_t i = 0; i < positions_.size(); ++i) {
        if (positions_[i] >= 128) throw std::invalid_argument("bit position exceeds word width");
        if (i > 0 && positions_[i] <= positions_[i - 1]) {
            throw std::invalid_argument("bit positions must be strictly increasing");
        }
    }
    contiguous_ = positions_.back() - positions_.front() + 1 == positions_.size();
}

BitSelector BitSelector::low(unsigned count) {
    std::vector<unsigned> pos(count);
    std::iota(pos.begin(), pos.end(), 0u);
    return BitSelector(std::move(pos));
}

BitSelector BitSelector::top(unsigned count, unsigned width) {
    if (count > width) throw std::invalid_argument("selector wider than the word");
    std::vector<unsigned> pos(count);
    std::iota(pos.begin(), pos.end(), width - count);
    return BitSelector(std::move(pos));
}

u128 select_bits(u128 y, const BitSelector& sel) {
    const auto& pos = sel.positions();
    if (sel.contiguous()) {
        unsigned l = sel.output_bits();
        u128 mask = l >= 128 ? ~u128(0) : (u128(1) << l) - 1;
        return (y >> pos.front()) & mask;
    }
    u128 out = 0;
    for (size_t i = 0; i < pos.size(); ++i) out |= ((y >> pos[i]) & 1) << i;
    return out;
}

u128 map_pow2(u128 v, unsigned b, u128 r) {
    assert(b >= 1 && b <= 127);
    assert(v < (u128(1) << b));
    assert(r >= 1 && r <= (u128(1) << b));
    return scaled_shift(v, r, b);
}

u128 map_mersenne(u128 v, unsigned b, u128 r) {
    assert(b >= 2 && b <= 127);
    assert(v < (u128(1) << b) - 1);
    assert(r >= 1 && r <= (u128(1) << b) - 1);
    return scaled_shift(v + 1, r, b);
}

ExactDivisionMap::ExactDivisionMap(const PseudoMersenneModulus& mod, u128 r)
    : divider_(mod), r_(r) {
    if (r == 0 || r > mod.p()) {
        throw std::invalid_argument("bucket count must be in [1, p]");
    }
    // grow the iteration count until the largest product (p-1) r is admissible
    UWide largest = wide_mul(UWide::of_u128(mod.p() - 1), UWide::of_u128(r));
    for (unsigned m = 1;; ++m) {
        PseudoMersenneModulus candidate(mod.b(), mod.c(), m, mod.engine());
        if (largest <= candidate.max_input()) {
            divider_ = candidate;
            return;
        }
    }
}

u128 ExactDivisionMap::operator()(u128 v) const {
    assert(v < divider_.p());
    UWide product = wide_mul(UWide::of_u128(v), UWide::of_u128(r_));
    return pseudo_mersenne_div(product, divider_).low_u128();
}

}  // namespace mersenne
