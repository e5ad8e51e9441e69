#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>

#include "mersenne/field.hpp"
#include "mersenne/prng.hpp"

using namespace mersenne;
using boost::multiprecision::cpp_int;

namespace {

cpp_int to_cpp(const UWide& v) {
    cpp_int r = 0;
    for (int i = 3; i >= 0; --i) r = (r << 64) | v.limb[i];
    return r;
}

UWide from_cpp(cpp_int v) {
    UWide r;
    for (int i = 0; i < 4; ++i) {
        r.limb[i] = static_cast<u64>(v & 0xffffffffffffffffULL);
        v >>= 64;
    }
    REQUIRE(v == 0);
    return r;
}

// Reference domain threshold: largest v admitted for n iterations, before the
// 256-bit capacity clamp.  q = 2^b.  For c | q the bound is c(q/c)^n - c, i.e.
// (q^n - c^n)/c^(n-1); otherwise (q/c)^(n-1) (q - c) = (q^n - c q^(n-1))/c^(n-1).
cpp_int reference_max_input(unsigned b, const cpp_int& c, unsigned n) {
    cpp_int q = cpp_int(1) << b;
    cpp_int qn = 1;
    for (unsigned i = 0; i < n; ++i) qn *= q;
    cpp_int cn1 = 1;
    for (unsigned i = 0; i + 1 < n; ++i) cn1 *= c;
    cpp_int d;
    if (q % c == 0) d = cn1 * c;
    else d = c * (qn / q);
    cpp_int t = (qn - d) / cn1;
    cpp_int clamp = (cpp_int(1) << 255) - (cpp_int(1) << 127);
    return t < clamp ? t : clamp;
}

u128 rand_c(rng::SplitMix64& g, unsigned b) {
    // offsets drawn with log-uniform bit width in [1, b-1]
    unsigned bits = 1 + unsigned(g.next() % (b - 1));
    u128 c = (u128(g.next()) << 64) | g.next();
    c &= (u128(1) << bits) - 1;
    if (c == 0) c = 1;
    if (c >= (u128(1) << (b - 1))) c >>= 1;
    return c ? c : 1;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("modulus validation") {
    MersenneModulus m3(3);
    CHECK(m3.b() == 3);
    CHECK(m3.p() == 7);
    CHECK_THROWS_AS(MersenneModulus(1), std::invalid_argument);
    CHECK_THROWS_AS(MersenneModulus(128), std::invalid_argument);

    // 2^11 - 1 = 23 * 89 is composite: allowed by default, rejected when primality is required
    CHECK_NOTHROW(MersenneModulus(11));
    CHECK_THROWS_AS(MersenneModulus(11, true), std::invalid_argument);
    CHECK_NOTHROW(MersenneModulus(13, true));
    CHECK_NOTHROW(MersenneModulus(127, true));

    CHECK_THROWS_AS(PseudoMersenneModulus(4, 8), std::invalid_argument);   // c must be < 2^(b-1)
    CHECK_THROWS_AS(PseudoMersenneModulus(4, 0), std::invalid_argument);
    CHECK(PseudoMersenneModulus(4, 3).p() == 13);
}

TEST_CASE("partial reduction examples") {
    MersenneModulus m(3);
    CHECK(mersenne_reduce_partial(UWide(13), m) == UWide(6));
    CHECK(mersenne_reduce_partial(UWide(0), m) == UWide(0));
    CHECK(mersenne_reduce_partial(UWide(48), m) == UWide(6));
}

TEST_CASE("partial reduction contracts for all small widths") {
    for (unsigned b = 2; b <= 11; ++b) {
        MersenneModulus m(b);
        u64 p = (u64(1) << b) - 1;
        for (u64 y = 0; y < p * p; ++y) {
            u64 r1 = mersenne_reduce_partial(UWide(y), m).low_u64();
            CHECK(r1 < 2 * p);
            CHECK(r1 % p == y % p);
            // twice plus a conditional subtract fully reduces
            u64 r2 = mersenne_reduce_partial(UWide(r1), m).low_u64();
            if (r2 >= p) r2 -= p;
            if (r2 != y % p) {
                REQUIRE(r2 == y % p);  // stop the flood on first failure
            }
        }
    }
}

TEST_CASE("divmod examples") {
    MersenneModulus m(3);
    auto d = mersenne_divmod(UWide(30), m);
    CHECK(d.quotient == UWide(4));
    CHECK(d.remainder == UWide(2));
    d = mersenne_divmod(UWide(63), m);
    CHECK(d.quotient == UWide(9));
    CHECK(d.remainder == UWide(0));
    d = mersenne_divmod(UWide(0), m);
    CHECK(d.quotient == UWide(0));
    CHECK(d.remainder == UWide(0));
    CHECK_THROWS_WITH_AS(mersenne_divmod(UWide(64), m), "input exceeds 2^(2b)",
                         std::domain_error);
}

TEST_CASE("divmod exhaustive small widths") {
    for (unsigned b = 2; b <= 11; ++b) {
        MersenneModulus m(b);
        u64 p = (u64(1) << b) - 1;
        u64 top = u64(1) << (2 * b);
        for (u64 v = 0; v < top; ++v) {
            auto d = mersenne_divmod(UWide(v), m);
            if (d.quotient.low_u64() != v / p || d.remainder.low_u64() != v % p) {
                CAPTURE(b);
                CAPTURE(v);
                REQUIRE(d.quotient.low_u64() == v / p);
                REQUIRE(d.remainder.low_u64() == v % p);
            }
        }
    }
}

TEST_CASE("branch-free division examples") {
    PseudoMersenneModulus m(4, 3, 2);
    CHECK(m.p() == 13);
    CHECK(pseudo_mersenne_div(UWide(27), m) == UWide(2));
    // domain boundary for two iterations: floor((16/3) * 13) = 69
    CHECK(m.max_input() == UWide(69));
    CHECK(pseudo_mersenne_div(UWide(69), m) == UWide(5));
    CHECK_THROWS_WITH_AS(pseudo_mersenne_div(UWide(70), m),
                         "input exceeds division domain for m iterations", std::domain_error);

    PseudoMersenneModulus m31(3, 1, 2);
    CHECK(pseudo_mersenne_div(UWide(30), m31) == UWide(4));
    auto d = mersenne_divmod(UWide(30), MersenneModulus(3));
    CHECK(d.quotient == pseudo_mersenne_div(UWide(30), m31));
}

TEST_CASE("modulus-from-quotient examples") {
    PseudoMersenneModulus m(4, 3, 2);
    CHECK(pseudo_mersenne_mod(UWide(27), UWide(2), m) == UWide(1));
    CHECK(pseudo_mersenne_mod(UWide(0), UWide(0), m) == UWide(0));
    PseudoMersenneModulus m31(3, 1, 2);
    CHECK(pseudo_mersenne_mod(UWide(48), UWide(6), m31) == UWide(6));
}

TEST_CASE("baseline divmod examples") {
    PseudoMersenneModulus m(4, 3);
    auto d = cch_divmod(UWide(27), m);
    CHECK(d.quotient == UWide(2));
    CHECK(d.remainder == UWide(1));
    d = cch_divmod(UWide(0), m);
    CHECK(d.quotient == UWide(0));
    CHECK(d.remainder == UWide(0));
    PseudoMersenneModulus m31(3, 1);
    d = cch_divmod(UWide(63), m31);
    CHECK(d.quotient == UWide(9));
    CHECK(d.remainder == UWide(0));
}

TEST_CASE("default iteration count") {
    // c = 1 needs exactly two iterations to cover all products of reduced values
    CHECK(PseudoMersenneModulus(3, 1).iterations() == 2);
    CHECK(PseudoMersenneModulus(61, 1).iterations() == 2);
    CHECK(PseudoMersenneModulus(127, 1).iterations() == 2);
    for (unsigned b : {4u, 9u, 31u, 61u, 89u, 127u}) {
        rng::SplitMix64 g(b);
        for (int i = 0; i < 20; ++i) {
            u128 c = rand_c(g, b);
            PseudoMersenneModulus m(b, c);
            // the default must admit every product of two reduced values
            UWide square_top = (UWide(1) << (2 * b)) - UWide(1);
            CHECK(m.max_input() >= square_top);
        }
    }
}

TEST_CASE("domain threshold matches reference") {
    rng::SplitMix64 g(0xD0);
    for (int trial = 0; trial < 400; ++trial) {
        unsigned b = 2 + unsigned(g.next() % 126);
        u128 c = rand_c(g, b);
        unsigned n = 1 + unsigned(g.next() % 6);
        PseudoMersenneModulus m(b, c, n);
        cpp_int expect = reference_max_input(b, to_cpp(UWide::of_u128(c)), n);
        CHECK(to_cpp(m.max_input()) == expect);
    }
    // saturation at the capacity clamp
    PseudoMersenneModulus big(3, 1, 90);
    CHECK(to_cpp(big.max_input()) == (cpp_int(1) << 255) - (cpp_int(1) << 127));
}

TEST_CASE("division against wide reference at the boundary") {
    rng::SplitMix64 g(0xD1);
    for (int trial = 0; trial < 400; ++trial) {
        unsigned b = 2 + unsigned(g.next() % 126);
        u128 c = rand_c(g, b);
        unsigned n = 1 + unsigned(g.next() % 5);
        PseudoMersenneModulus m(b, c, n);
        cpp_int p = to_cpp(from_cpp(cpp_int(1) << b)) - to_cpp(UWide::of_u128(c));
        UWide vmax = m.max_input();
        cpp_int vc = to_cpp(vmax);
        CHECK(to_cpp(pseudo_mersenne_div(vmax, m)) == vc / p);
        CHECK(to_cpp(pseudo_mersenne_mod(vmax, pseudo_mersenne_div(vmax, m), m)) == vc % p);
        // a uniformly shorter input
        cpp_int v2 = vc >> (1 + unsigned(g.next() % 64));
        UWide v2w = from_cpp(v2);
        UWide z = pseudo_mersenne_div(v2w, m);
        CHECK(to_cpp(z) == v2 / p);
        CHECK(to_cpp(pseudo_mersenne_mod(v2w, z, m)) == v2 % p);
        auto d = cch_divmod(v2w, m);
        CHECK(to_cpp(d.quotient) == v2 / p);
        CHECK(to_cpp(d.remainder) == v2 % p);
    }
}

TEST_CASE("early stop and fixpoint") {
    rng::SplitMix64 g(0xD2);
    for (int trial = 0; trial < 2000; ++trial) {
        unsigned b = 2 + unsigned(g.next() % 126);
        u128 c = rand_c(g, b);
        unsigned n = 2 + unsigned(g.next() % 4);
        PseudoMersenneModulus m(b, c, n);
        UWide vmax = m.max_input();
        unsigned cut = 1 + unsigned(g.next() % 120);
        UWide v = vmax >> (cut % unsigned(vmax.bit_length() ? vmax.bit_length() : 1));
        UWide z = pseudo_mersenne_div(v, m);
        UWide zshort = m.div_unchecked(v, n - 1);
        CHECK(zshort <= z);
        CHECK(z - zshort <= UWide(1));
        CHECK(m.div_unchecked(v, n + 1) == z);
    }
}

TEST_CASE("engines agree") {
    rng::SplitMix64 g(0xD3);
    for (unsigned b : {2u, 17u, 31u, 47u, 61u}) {
        u128 cs[] = {1, 3, (u128(1) << (b - 1)) - 1};
        for (u128 c : cs) {
            if (c == 0 || c >= (u128(1) << (b - 1))) continue;
            PseudoMersenneModulus fast(b, c, 0, Engine::Native);
            PseudoMersenneModulus slow(b, c, 0, Engine::Generic);
            CHECK(fast.engine() == Engine::Native);
            CHECK(slow.engine() == Engine::Generic);
            CHECK(fast.max_input() == slow.max_input());
            for (int i = 0; i < 500; ++i) {
                u128 v = (u128(g.next()) << 64) | g.next();
                v &= (u128(1) << (2 * b)) - 1;
                UWide vw = UWide::of_u128(v);
                UWide zf = pseudo_mersenne_div(vw, fast);
                UWide zs = pseudo_mersenne_div(vw, slow);
                CHECK(zf == zs);
                CHECK(pseudo_mersenne_mod(vw, zf, fast) == pseudo_mersenne_mod(vw, zs, slow));
                auto df = cch_divmod(vw, fast);
                auto ds = cch_divmod(vw, slow);
                CHECK(df.quotient == ds.quotient);
                CHECK(df.remainder == ds.remainder);
            }
        }
    }
    // b > 61 cannot take the native engine
    CHECK(PseudoMersenneModulus(89, 1).engine() == Engine::Generic);
    CHECK_THROWS_AS(PseudoMersenneModulus(89, 1, 0, Engine::Native), std::invalid_argument);
}

TEST_CASE("baseline agrees with branch-free pair on random inputs") {
    rng::SplitMix64 g(0xD4);
    for (int trial = 0; trial < 4000; ++trial) {
        unsigned b = 2 + unsigned(g.next() % 126);
        u128 c = rand_c(g, b);
        PseudoMersenneModulus m(b, c);
        u128 hi = g.next(), lo = g.next();
        u128 v128 = (hi << 64) | lo;
        UWide v = UWide::of_u128(v128 & ((u128(1) << ((2 * b > 127) ? 127 : 2 * b)) - 1));
        if (v > m.max_input()) v = m.max_input();
        UWide z = pseudo_mersenne_div(v, m);
        UWide y = pseudo_mersenne_mod(v, z, m);
        auto d = cch_divmod(v, m);
        CHECK(d.quotient == z);
        CHECK(d.remainder == y);
        CHECK(y < UWide::of_u128(m.p()));
    }
}

}  // TEST_SUITE
