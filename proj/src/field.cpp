#include "mersenne/field.hpp"

#include <algorithm>
#include <vector>

namespace mersenne {

namespace {

constexpr unsigned kPrimeExponents[] = {2, 3, 5, 7, 13, 17, 19, 31, 61, 89, 107, 127};

// Construction-time helper: unsigned integers of a few hundred bits, enough
// to evaluate the division domain threshold exactly for any iteration count.
// Runtime arithmetic never touches this type.
struct Big {
    std::vector<u64> w;  // little endian, no leading zero words

    static Big from_u128(u128 v) {
        Big r;
        if (static_cast<u64>(v >> 64)) r.w = {static_cast<u64>(v), static_cast<u64>(v >> 64)};
        else if (static_cast<u64>(v)) r.w = {static_cast<u64>(v)};
        return r;
    }

    static Big pow2(size_t bits) {
        Big r;
        r.w.assign(bits / 64 + 1, 0);
        r.w[bits / 64] = u64(1) << (bits % 64);
        return r;
    }

    bool is_zero() const { return w.empty(); }

    size_t bit_length() const {
        if (w.empty()) return 0;
        return 64 * (w.size() - 1) + (64 - std::countl_zero(w.back()));
    }

    void trim() {
        while (!w.empty() && w.back() == 0) w.pop_back();
    }

    void mul_u128(u128 m) {
        u64 m0 = static_cast<u64>(m), m1 = static_cast<u64>(m >> 64);
        std::vector<u64> out(w.size() + 2, 0);
        u64 carry = 0;
        for (size_t i = 0; i < w.size(); ++i) {
            u128 t = u128(w[i]) * m0 + out[i] + carry;
            out[i] = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
        }
        out[w.size()] = carry;
        if (m1) {
            carry = 0;
            for (size_t i = 0; i < w.size(); ++i) {
                u128 t = u128(w[i]) * m1 + out[i + 1] + carry;
                out[i + 1] = static_cast<u64>(t);
                carry = static_cast<u64>(t >> 64);
            }
            out[w.size() + 1] = carry;
        }
        w = std::move(out);
        trim();
    }

    void shl(size_t bits) {
        if (is_zero() || bits == 0) return;
        size_t words = bits / 64, rem = bits % 64;
        std::vector<u64> out(w.size() + words + 1, 0);
        for (size_t i = 0; i < w.size(); ++i) {
            out[i + words] |= rem ? (w[i] << rem) : w[i];
            if (rem) out[i + words + 1] |= w[i] >> (64 - rem);
        }
        w = std::move(out);
        trim();
    }

    void shr1() {
        for (size_t i = 0; i < w.size(); ++i) {
            w[i] >>= 1;
            if (i + 1 < w.size()) w[i] |= w[i + 1] << 63;
        }
        trim();
    }
};

int cmp(const Big& a, const Big& b) {
    if (a.w.size() != b.w.size()) return a.w.size() < b.w.size() ? -1 : 1;
    for (size_t i = a.w.size(); i-- > 0;) {
        if (a.w[i] != b.w[i]) return a.w[i] < b.w[i] ? -1 : 1;
    }
    return 0;
}

// a -= b, requires a >= b
void sub_from(Big& a, const Big& b) {
    u64 borrow = 0;
    for (size_t i = 0; i < a.w.size(); ++i) {
        u64 bi = i < b.w.size() ? b.w[i] : 0;
        u64 d = a.w[i] - bi;
        u64 borrow_out = (a.w[i] < bi) | (d < borrow ? 1 : 0);
        a.w[i] = d - borrow;
        borrow = borrow_out;
    }
    a.trim();
}

Big divide(Big t, const Big& d) {
    Big q;
    if (d.is_zero() || cmp(t, d) < 0) return q;
    long shift = long(t.bit_length()) - long(d.bit_length());
    Big cur = d;
    cur.shl(size_t(shift));
    q.w.assign(size_t(shift) / 64 + 1, 0);
    for (long s = shift; s >= 0; --s) {
        if (cmp(cur, t) <= 0) {
            sub_from(t, cur);
            q.w[size_t(s) / 64] |= u64(1) << (size_t(s) % 64);
        }
        cur.shr1();
    }
    q.trim();
    return q;
}

UWide to_uwide(const Big& v) {
    assert(v.bit_length() <= 256);
    UWide r;
    for (size_t i = 0; i < v.w.size() && i < 4; ++i) r.limb[i] = v.w[i];
    return r;
}

// (a * m + add) with the result known to fit 256 bits by the caller's domain
// reasoning; m is at most two limbs.
inline UWide mul_u128_add(const UWide& a, u128 m, const UWide& add) {
    u64 m0 = static_cast<u64>(m), m1 = static_cast<u64>(m >> 64);
    UWide r = add;
    u64 carry = 0;
    for (int i = 0; i < 4; ++i) {
        u128 t = u128(a.limb[i]) * m0 + r.limb[i] + carry;
        r.limb[i] = static_cast<u64>(t);
        carry = static_cast<u64>(t >> 64);
    }
    assert(carry == 0);
    if (m1) {
        carry = 0;
        for (int i = 0; i + 1 < 4; ++i) {
            u128 t = u128(a.limb[i]) * m1 + r.limb[i + 1] + carry;
            r.limb[i + 1] = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
        }
        assert(carry == 0 && a.limb[3] == 0);
    }
    return r;
}

// Smallest iteration count m with (2^b / c)^m >= 2^(2b), i.e. c^m <= 2^(b(m-2)).
unsigned default_iterations(unsigned b, u128 c) {
    if (c == 1) return 2;
    Big cm = Big::from_u128(c);
    cm.mul_u128(c);  // c^2
    unsigned m = 2;
    for (;;) {
        ++m;
        cm.mul_u128(c);
        if (cm.bit_length() <= size_t(b) * (m - 2) &&
            cmp(cm, Big::pow2(size_t(b) * (m - 2))) <= 0) {
            return m;
        }
    }
}

// Largest admissible dividend for n iterations: (q^n - d) / c^(n-1) with
// d = c^n when c divides q = 2^b, d = c q^(n-1) otherwise; clamped so that
// every iteration intermediate (z c + v') provably fits 256 bits.
UWide domain_threshold(unsigned b, u128 c, unsigned n) {
    Big qn = Big::pow2(size_t(b) * n);
    Big d;
    if ((c & (c - 1)) == 0) {
        d = Big::from_u128(1);
        for (unsigned i = 0; i < n; ++i) d.mul_u128(c);
    } else {
        d = Big::from_u128(c);
        d.shl(size_t(b) * (n - 1));
    }
    sub_from(qn, d);
    Big cn1 = Big::from_u128(1);
    for (unsigned i = 0; i + 1 < n; ++i) cn1.mul_u128(c);
    Big v = divide(std::move(qn), cn1);
    Big clamp = Big::pow2(255);
    sub_from(clamp, Big::pow2(127));
    return to_uwide(cmp(v, clamp) < 0 ? v : clamp);
}

}  // namespace

MersenneModulus::MersenneModulus(unsigned b, bool require_prime) : b_(b) {
    if (b < 2 || b > 127) throw std::invalid_argument("exponent must be in [2, 127]");
    prime_exponent_ = std::find(std::begin(kPrimeExponents), std::end(kPrimeExponents), b) !=
                      std::end(kPrimeExponents);
    if (require_prime && !prime_exponent_) {
        throw std::invalid_argument("2^b - 1 is not prime for this exponent");
    }
    UWide pw = UWide::of_u128(p());
    p_squared_ = wide_mul(pw, pw);
}

DivMod mersenne_divmod(const UWide& v, const MersenneModulus& mod) {
    unsigned b = mod.b();
    if (v.bit_length() > int(2 * b)) throw std::domain_error("input exceeds 2^(2b)");
    if (b <= 61) {
        u128 x = v.low_u128();
        u128 vp = x + 1;
        u128 z = ((vp >> b) + vp) >> b;
        u128 y = (x + z) & ((u128(1) << b) - 1);
        return {UWide::of_u128(z), UWide::of_u128(y)};
    }
    UWide vp = v + UWide(1);
    UWide z = ((vp >> b) + vp) >> b;
    UWide y = (v + z) & UWide::mask_low(b);
    return {z, y};
}

PseudoMersenneModulus::PseudoMersenneModulus(unsigned b, u128 c, unsigned m_iters, Engine engine)
    : b_(b), c_(c) {
    if (b < 2 || b > 127) throw std::invalid_argument("width must be in [2, 127]");
    if (c == 0 || c >= (u128(1) << (b - 1))) {
        throw std::invalid_argument("offset must satisfy 1 <= c < 2^(b-1)");
    }
    switch (engine) {
        case Engine::Auto:
            engine_ = b <= 61 ? Engine::Native : Engine::Generic;
            break;
        case Engine::Native:
            if (b > 61) throw std::invalid_argument("native engine requires b <= 61");
            engine_ = Engine::Native;
            break;
        case Engine::Generic:
            engine_ = Engine::Generic;
            break;
    }
    m_ = m_iters ? m_iters : default_iterations(b, c);
    max_input_ = domain_threshold(b_, c_, m_);
}

UWide PseudoMersenneModulus::div_unchecked(const UWide& v, unsigned iterations) const {
    if (engine_ == Engine::Native && v.bit_length() <= 126) {
        u128 x = v.low_u128();
        u128 vp = x + c_;
        u128 z = vp >> b_;
        for (unsigned i = 1; i < iterations; ++i) z = (z * c_ + vp) >> b_;
        return UWide::of_u128(z);
    }
    UWide vp = v + UWide::of_u128(c_);
    UWide z = vp >> b_;
    for (unsigned i = 1; i < iterations; ++i) z = mul_u128_add(z, c_, vp) >> b_;
    return z;
}

UWide pseudo_mersenne_div(const UWide& v, const PseudoMersenneModulus& mod) {
    if (v > mod.max_input()) {
        throw std::domain_error("input exceeds division domain for m iterations");
    }
    return mod.div_unchecked(v, mod.iterations());
}

UWide pseudo_mersenne_mod(const UWide& v, const UWide& z, const PseudoMersenneModulus& mod) {
    if (mod.engine() == Engine::Native && v.bit_length() <= 126) {
        u128 y = (v.low_u128() + z.low_u128() * mod.c()) & ((u128(1) << mod.b()) - 1);
        return UWide::of_u128(y);
    }
    return mul_u128_add(z, mod.c(), v) & UWide::mask_low(mod.b());
}

DivMod cch_divmod(const UWide& x, const PseudoMersenneModulus& mod) {
    unsigned b = mod.b();
    u128 c = mod.c();
    if (mod.engine() == Engine::Native && x.bit_length() <= 126) {
        u128 mask = (u128(1) << b) - 1;
        u128 v = x.low_u128();
        u128 q = v >> b, r = v & mask;
        u128 quot = q, rem = r;
        while (q) {
            u128 t = q * c;
            q = t >> b;
            quot += q;
            rem += t & mask;
        }
        u128 p = mod.p();
        while (rem >= p) {
            rem -= p;
            quot += 1;
        }
        return {UWide::of_u128(quot), UWide::of_u128(rem)};
    }
    UWide mask = UWide::mask_low(b);
    UWide q = x >> b, r = x & mask;
    UWide quot = q, rem = r;
    while (!q.is_zero()) {
        UWide t = mul_u128_add(q, c, UWide());
        q = t >> b;
        quot = quot + q;
        rem = rem + (t & mask);
    }
    UWide p = UWide::of_u128(mod.p());
    while (rem >= p) {
        rem = rem - p;
        quot = quot + UWide(1);
    }
    return {quot, rem};
}

}  // namespace mersenne
