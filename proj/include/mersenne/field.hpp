#pragma once

#include <stdexcept>

#include "mersenne/uwide.hpp"

namespace mersenne {

// Arithmetic backend.  Native keeps every intermediate in double words and is
// only available for b <= 61; Generic runs on UWide limbs for any b <= 127.
enum class Engine { Auto, Native, Generic };

struct DivMod {
    UWide quotient;
    UWide remainder;
};

// Modulus 2^b - 1.  Primality of the exponent is opt-in: hash families demand
// it, plain reduction and division do not.
class MersenneModulus {
public:
    explicit MersenneModulus(unsigned b, bool require_prime = false);

    unsigned b() const { return b_; }
    u128 p() const { return (u128(1) << b_) - 1; }
    bool prime_exponent() const { return prime_exponent_; }
    const UWide& p_squared() const { return p_squared_; }

private:
    unsigned b_;
    bool prime_exponent_;
    UWide p_squared_;
};

// Modulus 2^b - c with a configured iteration count for branch-free division.
// Construction precomputes the largest admissible dividend so the per-call
// domain check is a single 256-bit compare.
class PseudoMersenneModulus {
public:
    // m_iters == 0 selects the smallest count whose domain covers products of
    // two reduced values (all v < 2^(2b)).
    PseudoMersenneModulus(unsigned b, u128 c, unsigned m_iters = 0, Engine engine = Engine::Auto);

    unsigned b() const { return b_; }
    u128 c() const { return c_; }
    u128 p() const { return (u128(1) << b_) - c_; }
    unsigned iterations() const { return m_; }
    Engine engine() const { return engine_; }
    const UWide& max_input() const { return max_input_; }

    // Raw kernel: v' = v + c, then `iterations` rounds of z = (z c + v') >> b
    // folded as one initial shift plus iterations-1 multiply rounds.  Performs
    // no domain validation; with fewer rounds than configured the quotient may
    // undershoot (never overshoot), with more it is already converged.
    UWide div_unchecked(const UWide& v, unsigned iterations) const;

private:
    unsigned b_;
    u128 c_;
    unsigned m_;
    Engine engine_;
    UWide max_input_;
};

// (y & p) + (y >> b): congruent to y mod p and < 2p whenever y < p * 2^b.
inline UWide mersenne_reduce_partial(const UWide& y, const MersenneModulus& mod) {
    // admissible up to p * 2^b = p^2 + p, the largest value a Horner step can produce
    assert(y < mod.p_squared() + UWide::of_u128(mod.p()));
    // both terms fit double words: y >> b <= p - 1 when y < p * 2^b
    u128 lo = (y & UWide::mask_low(mod.b())).low_u128();
    u128 hi = (y >> mod.b()).low_u128();
    return UWide::of_u128(lo + hi);
}

// Branch-free quotient and remainder for p = 2^b - 1, any v < 2^(2b).
DivMod mersenne_divmod(const UWide& v, const MersenneModulus& mod);

// Quotient floor(v / (2^b - c)); rejects inputs beyond the configured domain.
UWide pseudo_mersenne_div(const UWide& v, const PseudoMersenneModulus& mod);

// Remainder from a known quotient: (v + z c) & (2^b - 1).
UWide pseudo_mersenne_mod(const UWide& v, const UWide& z, const PseudoMersenneModulus& mod);

// Baseline divmod: fold the high part down with q c until it vanishes, then
// clean up the remainder by subtraction.  Correct for any x; data-dependent
// loops make it the speed reference, not the fast path.
DivMod cch_divmod(const UWide& x, const PseudoMersenneModulus& mod);

}  // namespace mersenne
