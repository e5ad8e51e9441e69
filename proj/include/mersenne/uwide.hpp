#pragma once

#include <array>
#include <bit>
#include <cassert>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

namespace mersenne {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

namespace detail {

// Capacity violations are programming errors, reported in every build type.
inline void hard_assert(bool ok, const char* msg) {
    if (!ok) {
        std::fputs(msg, stderr);
        std::fputc('\n', stderr);
        std::abort();
    }
}

}  // namespace detail

// Unsigned integer on four 64-bit limbs, little endian, 256-bit capacity.
// Operations never wrap silently: anything that could exceed capacity is
// guarded.  Values stay cheap to copy; no allocation anywhere.
struct UWide {
    std::array<u64, 4> limb{};

    constexpr UWide() = default;
    constexpr UWide(u64 v) : limb{v, 0, 0, 0} {}

    static constexpr UWide of_u128(u128 v) {
        UWide r;
        r.limb[0] = static_cast<u64>(v);
        r.limb[1] = static_cast<u64>(v >> 64);
        return r;
    }

    // 2^bits - 1 for bits <= 256
    static constexpr UWide mask_low(unsigned bits) {
        assert(bits <= 256);
        UWide r;
        for (unsigned i = 0; i < 4; ++i) {
            if (bits >= 64 * (i + 1)) {
                r.limb[i] = ~u64(0);
            } else if (bits > 64 * i) {
                r.limb[i] = (u64(1) << (bits - 64 * i)) - 1;
            }
        }
        return r;
    }

    constexpr bool is_zero() const { return !(limb[0] | limb[1] | limb[2] | limb[3]); }
    constexpr u64 low_u64() const { return limb[0]; }
    constexpr u128 low_u128() const { return (u128(limb[1]) << 64) | limb[0]; }
    constexpr bool fits_u128() const { return !(limb[2] | limb[3]); }

    constexpr int bit_length() const {
        for (int i = 3; i >= 0; --i) {
            if (limb[i]) return 64 * (i + 1) - std::countl_zero(limb[i]);
        }
        return 0;
    }

    friend constexpr bool operator==(const UWide&, const UWide&) = default;

    friend constexpr std::strong_ordering operator<=>(const UWide& a, const UWide& b) {
        for (int i = 3; i >= 0; --i) {
            if (a.limb[i] != b.limb[i]) return a.limb[i] <=> b.limb[i];
        }
        return std::strong_ordering::equal;
    }

    friend constexpr UWide operator+(const UWide& a, const UWide& b) {
        UWide r;
        u128 carry = 0;
        for (int i = 0; i < 4; ++i) {
            u128 t = u128(a.limb[i]) + b.limb[i] + carry;
            r.limb[i] = static_cast<u64>(t);
            carry = t >> 64;
        }
        assert(carry == 0 && "sum exceeds 256-bit capacity");
        return r;
    }

    friend constexpr UWide operator-(const UWide& a, const UWide& b) {
        assert(a >= b && "difference would be negative");
        UWide r;
        u64 borrow = 0;
        for (int i = 0; i < 4; ++i) {
            u64 bi = b.limb[i];
            u64 t = a.limb[i] - bi;
            u64 borrow_out = (a.limb[i] < bi) | ((t < borrow) ? 1 : 0);
            r.limb[i] = t - borrow;
            borrow = borrow_out;
        }
        return r;
    }

    friend constexpr UWide operator&(const UWide& a, const UWide& b) {
        UWide r;
        for (int i = 0; i < 4; ++i) r.limb[i] = a.limb[i] & b.limb[i];
        return r;
    }

    friend constexpr UWide operator|(const UWide& a, const UWide& b) {
        UWide r;
        for (int i = 0; i < 4; ++i) r.limb[i] = a.limb[i] | b.limb[i];
        return r;
    }

    friend constexpr UWide operator<<(const UWide& v, unsigned s) {
        assert(s < 256);
        assert(v.bit_length() + int(s) <= 256 && "shift would drop bits");
        UWide r;
        unsigned ls = s >> 6, bs = s & 63;
        for (int i = 3; i >= int(ls); --i) {
            u64 w = v.limb[i - ls] << bs;
            if (bs && i > int(ls)) w |= v.limb[i - ls - 1] >> (64 - bs);
            r.limb[i] = w;
        }
        return r;
    }

    friend constexpr UWide operator>>(const UWide& v, unsigned s) {
        if (s >= 256) return UWide();
        UWide r;
        unsigned ls = s >> 6, bs = s & 63;
        for (unsigned i = 0; i + ls < 4; ++i) {
            u64 w = v.limb[i + ls] >> bs;
            if (bs && i + ls + 1 < 4) w |= v.limb[i + ls + 1] << (64 - bs);
            r.limb[i] = w;
        }
        return r;
    }
};

// Exact 256-bit product.  The bit-length precondition makes overflow
// impossible; violating it is a programming error and aborts.
inline UWide wide_mul(const UWide& a, const UWide& b) {
    detail::hard_assert(a.bit_length() + b.bit_length() <= 256,
                        "wide_mul: operand widths exceed 256-bit capacity");
    UWide r;
    for (int i = 0; i < 4; ++i) {
        if (!a.limb[i]) continue;
        u64 carry = 0;
        for (int j = 0; i + j < 4; ++j) {
            u128 t = u128(a.limb[i]) * b.limb[j] + r.limb[i + j] + carry;
            r.limb[i + j] = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
        }
        assert(carry == 0);
    }
    return r;
}

}  // namespace mersenne
