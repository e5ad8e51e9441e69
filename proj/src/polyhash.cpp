#include "mersenne/polyhash.hpp"

#include <stdexcept>

#include "mersenne/prng.hpp"

namespace mersenne {

namespace {

// Uniform draw from [p], p = 2^b - 1: take b bits, reject the all-ones word.
u128 draw_residue(rng::SplitMix64& g, unsigned b) {
    const u128 p = (u128(1) << b) - 1;
    for (;;) {
        u128 v;
        if (b <= 64) {
            v = g.next() & u64(p);
        } else {
            v = ((u128(g.next()) << 64) | g.next()) & p;
        }
        if (v != p) return v;
    }
}

}  // namespace

PolyHashFamily::PolyHashFamily(const MersenneModulus& modulus, unsigned k, u128 key_domain,
                               u64 seed, HashFinish finish)
    : modulus_(modulus), key_domain_(key_domain), finish_(finish) {
    if (k == 0) throw std::invalid_argument("independence degree must be at least 1");
    rng::SplitMix64 g(seed);
    coeffs_.reserve(k);
    for (unsigned i = 0; i < k; ++i) coeffs_.push_back(draw_residue(g, modulus_.b()));
    validate();
}

PolyHashFamily::PolyHashFamily(const MersenneModulus& modulus, std::vector<u128> coefficients,
                               u128 key_domain, HashFinish finish)
    : modulus_(modulus), coeffs_(std::move(coefficients)), key_domain_(key_domain),
      finish_(finish) {
    if (coeffs_.empty()) throw std::invalid_argument("independence degree must be at least 1");
    for (u128 a : coeffs_) {
        if (a >= modulus_.p()) throw std::invalid_argument("coefficient not reduced");
    }
    validate();
}

void PolyHashFamily::validate() const {
    if (key_domain_ == 0 || (key_domain_ & (key_domain_ - 1)) != 0) {
        throw std::invalid_argument("key domain must be a power of two");
    }
    // joint uniformity needs every key to be a distinct residue and the Horner
    // steps need their partial values to stay below 2p
    if (modulus_.p() < 2 * key_domain_ - 1) {
        throw std::invalid_argument("modulus too small for key domain");
    }
}

u128 PolyHashFamily::operator()(u128 x) const {
    if (x >= key_domain_) throw std::domain_error("key outside domain");
    const unsigned b = modulus_.b();
    const size_t k = coeffs_.size();

    if (b <= 61) {
        const u64 p = u64(modulus_.p());
        const u64 xs = u64(x);
        u64 y = u64(coeffs_[k - 1]);
        for (size_t i = k - 1; i-- > 0;) {
            u128 t = u128(y) * xs + u64(coeffs_[i]);
            y = u64(t & p) + u64(t >> b);
            assert(y < 2 * p);
        }
        if (finish_ == HashFinish::ConditionalSubtract) return y >= p ? y - p : y;
        u64 z = ((y + 1) >> b);  // y < 2p = 2^(b+1) - 2, so the carry is the top bit
        return (y + z) & p;
    }

    const u128 p = modulus_.p();
    const UWide xw = UWide::of_u128(x);
    u128 y = coeffs_[k - 1];
    for (size_t i = k - 1; i-- > 0;) {
        UWide t = wide_mul(UWide::of_u128(y), xw) + UWide::of_u128(coeffs_[i]);
        y = mersenne_reduce_partial(t, modulus_).low_u128();
        assert(y < 2 * p);
    }
    if (finish_ == HashFinish::ConditionalSubtract) return y >= p ? y - p : y;
    u128 z = (y + 1) >> b;
    return (y + z) & p;
}

MultiplyShiftFamily::MultiplyShiftFamily(unsigned input_bits, unsigned output_bits, u64 seed)
    : input_bits_(input_bits), output_bits_(output_bits) {
    if (input_bits == 0 || input_bits > 64 || output_bits == 0 || output_bits > input_bits) {
        throw std::invalid_argument("need 1 <= output bits <= input bits <= 64");
    }
    wrap_mask_ = (input_bits == 64) ? ~u128(0) : (u128(1) << (2 * input_bits)) - 1;
    rng::SplitMix64 g(seed);
    multiplier_ = (((u128(g.next()) << 64) | g.next()) & wrap_mask_) | 1;
    offset_ = ((u128(g.next()) << 64) | g.next()) & wrap_mask_;
}

MultiplyShiftFamily::MultiplyShiftFamily(unsigned input_bits, unsigned output_bits,
                                         u128 multiplier, u128 offset)
    : input_bits_(input_bits), output_bits_(output_bits), multiplier_(multiplier),
      offset_(offset) {
    if (input_bits == 0 || input_bits > 64 || output_bits == 0 || output_bits > input_bits) {
        throw std::invalid_argument("need 1 <= output bits <= input bits <= 64");
    }
    wrap_mask_ = (input_bits == 64) ? ~u128(0) : (u128(1) << (2 * input_bits)) - 1;
    if (multiplier_ > wrap_mask_ || offset_ > wrap_mask_) {
        throw std::invalid_argument("parameters exceed the wrapping width");
    }
}

}  // namespace mersenne
