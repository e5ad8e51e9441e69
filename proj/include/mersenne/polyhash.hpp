#pragma once

#include <vector>

#include "mersenne/field.hpp"

namespace mersenne {

// How a Horner evaluation collapses its partially reduced state (< 2p) to [p].
enum class HashFinish {
    ConditionalSubtract,  // subtract p once if needed
    BranchFree,           // quotient trick: add carry of (y+1) across the width
};

// Degree-(k-1) polynomial over Z_p, p = 2^b - 1, coefficients drawn uniformly.
// Evaluating at k distinct keys gives exactly uniform joint output, so the
// family is k-universal on any key domain [u] with p >= 2u - 1.
class PolyHashFamily {
public:
    // Draws k coefficients from a seeded deterministic generator.
    PolyHashFamily(const MersenneModulus& modulus, unsigned k, u128 key_domain, u64 seed,
                   HashFinish finish = HashFinish::ConditionalSubtract);
    // Uses the given coefficients (a_0, ..., a_{k-1}), each < p.
    PolyHashFamily(const MersenneModulus& modulus, std::vector<u128> coefficients,
                   u128 key_domain, HashFinish finish = HashFinish::ConditionalSubtract);

    // Evaluates sum a_i x^i mod p, fully reduced to [p].
    u128 operator()(u128 x) const;

    const MersenneModulus& modulus() const { return modulus_; }
    const std::vector<u128>& coefficients() const { return coeffs_; }
    unsigned independence() const { return unsigned(coeffs_.size()); }
    u128 key_domain() const { return key_domain_; }
    HashFinish finish() const { return finish_; }

private:
    void validate() const;

    MersenneModulus modulus_;
    std::vector<u128> coeffs_;
    u128 key_domain_;
    HashFinish finish_;
};

// Pairwise-independent baseline: ((a x + b) mod 2^(2w)) >> (2w - l) with a odd.
class MultiplyShiftFamily {
public:
    MultiplyShiftFamily(unsigned input_bits, unsigned output_bits, u64 seed);
    MultiplyShiftFamily(unsigned input_bits, unsigned output_bits, u128 multiplier, u128 offset);

    u128 operator()(u128 x) const {
        assert(x < (u128(1) << input_bits_));
        u128 wrapped = (multiplier_ * x + offset_) & wrap_mask_;
        return wrapped >> (2 * input_bits_ - output_bits_);
    }

    u128 multiplier() const { return multiplier_; }
    u128 offset() const { return offset_; }
    unsigned input_bits() const { return input_bits_; }
    unsigned output_bits() const { return output_bits_; }

private:
    unsigned input_bits_;
    unsigned output_bits_;
    u128 multiplier_;
    u128 offset_;
    u128 wrap_mask_;
};

}  // namespace mersenne
