#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mersenne/prng.hpp"
#include "mersenne/sketch.hpp"

using namespace mersenne;

TEST_SUITE_BEGIN("sketch");

TEST_CASE("power-of-two splitter carves index and sign") {
    CHECK(split_pow2(0b110, 3, 2) == SignIndexPair{2, -1});
    CHECK(split_pow2(0, 3, 2) == SignIndexPair{0, +1});
    CHECK(split_pow2(0b011, 3, 2) == SignIndexPair{3, +1});
    // exhaustive b=3, l=1: index is the low bit, sign is the top bit
    for (u128 h = 0; h < 8; ++h) {
        auto [i, s] = split_pow2(h, 3, 1);
        CHECK(i == (h & 1));
        CHECK(s == (h >= 4 ? -1 : +1));
    }
}

TEST_CASE("arbitrary-width splitter is most uniform within each sign class") {
    CHECK(split_arb_uniform(0b1011, 4, 3) == SignIndexPair{1, +1});
    CHECK(split_arb_uniform(0, 4, 3) == SignIndexPair{0, -1});

    long counts[2][3] = {};
    for (u128 h = 0; h < 16; ++h) {
        auto [i, s] = split_arb_uniform(h, 4, 3);
        REQUIRE(i < 3);
        ++counts[s == +1][size_t(i)];
    }
    for (auto& cls : counts) {
        auto [lo, hi] = std::minmax({cls[0], cls[1], cls[2]});
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("mersenne splitter shifts by one before carving") {
    CHECK(split_arb_mersenne(3, 3, 3) == SignIndexPair{0, +1});
    CHECK(split_arb_mersenne(6, 3, 3) == SignIndexPair{2, +1});
    // Pr[i = 0] over uniform h in [7] is exactly 3/7
    int zero_hits = 0;
    for (u128 h = 0; h < 7; ++h) {
        auto [i, s] = split_arb_mersenne(h, 3, 3);
        REQUIRE(i < 3);
        REQUIRE((s == 1 || s == -1));
        zero_hits += (i == 0);
    }
    CHECK(zero_hits == 3);
}

TEST_CASE("updates cancel and add linearly") {
    MersenneModulus m61(61, true);
    for (Splitter sp : {Splitter::Pow2, Splitter::UniformArb, Splitter::MersenneArb}) {
        u64 width = sp == Splitter::Pow2 ? 8 : 6;
        CountSketch sk(3, width, m61, u128(1) << 32, sp, 0xCAFE);
        sk.process(17, 5);
        sk.process(17, -5);
        CHECK(std::all_of(sk.counters().begin(), sk.counters().end(),
                          [](i64 c) { return c == 0; }));

        CountSketch twice(3, width, m61, u128(1) << 32, sp, 0xCAFE);
        twice.process(99, 2);
        twice.process(99, 2);
        CountSketch once(3, width, m61, u128(1) << 32, sp, 0xCAFE);
        once.process(99, 4);
        CHECK(twice == once);
    }
}

TEST_CASE("single key leaves one counter per row") {
    MersenneModulus m31(5, true);
    CountSketch sk(1, 4, m31, 16, Splitter::Pow2, 0xD1CE);
    sk.process(7, -9);
    int nonzero = 0;
    for (i64 c : sk.counters()) {
        if (c != 0) {
            ++nonzero;
            CHECK(std::abs(c) == 9);
        }
    }
    CHECK(nonzero == 1);
}

TEST_CASE("counter mass never exceeds processed mass") {
    MersenneModulus m61(61, true);
    CountSketch sk(4, 16, m61, u128(1) << 32, Splitter::MersenneArb, 0x1111);
    rng::SplitMix64 g(0x77);
    i64 mass = 0;
    for (int j = 0; j < 500; ++j) {
        i64 delta = i64(g.next() % 1000) - 500;
        sk.process(g.next() & 0xFFFF, delta);
        mass += std::abs(delta);
    }
    for (unsigned row = 0; row < 4; ++row) {
        i64 row_mass = 0;
        for (u64 i = 0; i < 16; ++i) row_mass += std::abs(sk.counter(row, i));
        CHECK(row_mass <= mass);
    }
}

TEST_CASE("second moment of simple states") {
    MersenneModulus m61(61, true);
    CountSketch sk(3, 8, m61, u128(1) << 32, Splitter::Pow2, 0xF00D);
    CHECK(sk.second_moment().value == 0);
    CHECK(sk.second_moment(true).value == 0);
    CHECK_FALSE(sk.second_moment().saturated);

    sk.process(123, -7);
    for (unsigned row = 0; row < 3; ++row) CHECK(sk.row_second_moment(row).value == 49);
    CHECK(sk.second_moment().value == 49);
    CHECK(sk.second_moment(true).value == 49);
}

TEST_CASE("exact expectation of the second moment by full enumeration") {
    // p=31, u=16, r=4, stream f = {1: +2, 3: -1, 7: +3} has F2 = 14, F1 = 4.
    // Summed over all 31^4 coefficient vectors, X adds up to
    // 14 * 923521 + (16 - 14) * 961 = 12931216, i.e. E[X] = 14 + 2/961.
    MersenneModulus m31(5, true);
    for (Splitter sp : {Splitter::Pow2, Splitter::MersenneArb}) {
        unsigned long long total = 0;
        for (u128 a0 = 0; a0 < 31; ++a0) {
            for (u128 a1 = 0; a1 < 31; ++a1) {
                for (u128 a2 = 0; a2 < 31; ++a2) {
                    for (u128 a3 = 0; a3 < 31; ++a3) {
                        std::vector<PolyHashFamily> fams;
                        fams.emplace_back(m31, std::vector<u128>{a0, a1, a2, a3}, 16);
                        CountSketch sk(4, sp, std::move(fams));
                        sk.process(1, 2);
                        sk.process(3, -1);
                        sk.process(7, 3);
                        total += (unsigned long long)(sk.second_moment().value);
                    }
                }
            }
        }
        CHECK(total == 12931216ull);
    }
}

TEST_CASE("point query of simple states") {
    MersenneModulus m61(61, true);
    CountSketch sk(5, 16, m61, u128(1) << 32, Splitter::MersenneArb, 0xBEEF);
    CHECK(sk.point_query(42) == 0);
    sk.process(42, 1234);
    CHECK(sk.point_query(42) == 1234);
    sk.process(42, -234);
    CHECK(sk.point_query(42) == 1000);
}

TEST_CASE("exact expectation of the row point-query estimator") {
    // same enumeration; per-family signed estimate at x=1 sums to 1848964,
    // i.e. E = 2 + 1922/923521 (true weight 2 plus the 1/p^2-scale excess)
    MersenneModulus m31(5, true);
    for (Splitter sp : {Splitter::Pow2, Splitter::MersenneArb}) {
        long long total = 0;
        for (u128 a0 = 0; a0 < 31; ++a0) {
            for (u128 a1 = 0; a1 < 31; ++a1) {
                for (u128 a2 = 0; a2 < 31; ++a2) {
                    for (u128 a3 = 0; a3 < 31; ++a3) {
                        std::vector<PolyHashFamily> fams;
                        fams.emplace_back(m31, std::vector<u128>{a0, a1, a2, a3}, 16);
                        CountSketch sk(4, sp, std::move(fams));
                        sk.process(1, 2);
                        sk.process(3, -1);
                        sk.process(7, 3);
                        total += sk.point_query(1);
                    }
                }
            }
        }
        CHECK(total == 1848964ll);
    }
}

TEST_CASE("serialization round-trips byte for byte") {
    MersenneModulus m61(61, true);
    CountSketch sk(3, 16, m61, u128(1) << 32, Splitter::MersenneArb, 0xABCD);
    rng::SplitMix64 g(0x99);
    for (int j = 0; j < 200; ++j) sk.process(g.next() & 0xFFFFF, i64(g.next() % 64) - 32);

    auto bytes = sk.serialize();
    CHECK(bytes.size() == 33 + 8 * 3 + 8 * 3 * 16);
    CHECK(std::equal(bytes.begin(), bytes.begin() + 5, "MCSK1"));

    CountSketch back = CountSketch::deserialize(bytes);
    CHECK(back == sk);
    CHECK(back.serialize() == bytes);

    // the restored sketch keeps hashing identically
    back.process(7, 3);
    sk.process(7, 3);
    CHECK(back == sk);

    // determinism across independently built twins
    CountSketch twin(3, 16, m61, u128(1) << 32, Splitter::MersenneArb, 0xABCD);
    rng::SplitMix64 g2(0x99);
    for (int j = 0; j < 200; ++j) twin.process(g2.next() & 0xFFFFF, i64(g2.next() % 64) - 32);
    twin.process(7, 3);
    CHECK(twin.serialize() == sk.serialize());
}

TEST_CASE("deserialization rejects malformed payloads") {
    MersenneModulus m31(5, true);
    CountSketch sk(2, 4, m31, 16, Splitter::Pow2, 7);
    auto bytes = sk.serialize();

    auto corrupt_magic = bytes;
    corrupt_magic[0] = 'X';
    CHECK_THROWS_AS(CountSketch::deserialize(corrupt_magic), std::invalid_argument);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 1);
    CHECK_THROWS_AS(CountSketch::deserialize(truncated), std::invalid_argument);

    auto oversized = bytes;
    oversized.push_back(0);
    CHECK_THROWS_AS(CountSketch::deserialize(oversized), std::invalid_argument);

    auto bad_splitter = bytes;
    bad_splitter[25] = 9;
    CHECK_THROWS_AS(CountSketch::deserialize(bad_splitter), std::invalid_argument);

    CHECK_THROWS_AS(CountSketch::deserialize({}), std::invalid_argument);
}

TEST_CASE("injected families cannot serialize") {
    MersenneModulus m31(5, true);
    std::vector<PolyHashFamily> fams;
    fams.emplace_back(m31, std::vector<u128>{1, 2, 3, 4}, 16);
    CountSketch sk(4, Splitter::Pow2, std::move(fams));
    CHECK_THROWS_AS(sk.serialize(), std::logic_error);
}

TEST_CASE("merging equals sketching the concatenated stream") {
    MersenneModulus m61(61, true);
    auto fresh = [&] {
        return CountSketch(3, 32, m61, u128(1) << 32, Splitter::MersenneArb, 0x5EED);
    };
    CountSketch first = fresh(), second = fresh(), both = fresh();
    rng::SplitMix64 g(0xAB);
    for (int j = 0; j < 300; ++j) {
        u128 x = g.next() & 0xFFFF;
        i64 d = i64(g.next() % 200) - 100;
        first.process(x, d);
        both.process(x, d);
    }
    for (int j = 0; j < 300; ++j) {
        u128 x = g.next() & 0xFFFF;
        i64 d = i64(g.next() % 200) - 100;
        second.process(x, d);
        both.process(x, d);
    }
    first.merge(second);
    CHECK(first == both);
    CHECK(first.serialize() == both.serialize());
}

TEST_CASE("merge requires identical geometry and seeds") {
    MersenneModulus m61(61, true);
    CountSketch a(3, 32, m61, u128(1) << 32, Splitter::MersenneArb, 1);
    CountSketch seed_diff(3, 32, m61, u128(1) << 32, Splitter::MersenneArb, 2);
    CountSketch width_diff(3, 16, m61, u128(1) << 32, Splitter::MersenneArb, 1);
    CountSketch rows_diff(2, 32, m61, u128(1) << 32, Splitter::MersenneArb, 1);
    CountSketch split_diff(3, 32, m61, u128(1) << 32, Splitter::UniformArb, 1);
    CHECK_THROWS_AS(a.merge(seed_diff), std::invalid_argument);
    CHECK_THROWS_AS(a.merge(width_diff), std::invalid_argument);
    CHECK_THROWS_AS(a.merge(rows_diff), std::invalid_argument);
    CHECK_THROWS_AS(a.merge(split_diff), std::invalid_argument);
    CHECK_NOTHROW(a.merge(CountSketch(3, 32, m61, u128(1) << 32, Splitter::MersenneArb, 1)));
}

TEST_CASE("construction validation") {
    MersenneModulus m61(61, true);
    MersenneModulus m31(5, true);
    // width 1 carries no information and the variance bound needs r > 1
    CHECK_THROWS_AS(CountSketch(1, 1, m61, 16, Splitter::MersenneArb, 1), std::invalid_argument);
    CHECK_THROWS_AS(CountSketch(0, 8, m61, 16, Splitter::Pow2, 1), std::invalid_argument);
    // pow2 splitter needs a power-of-two width strictly inside the hash range
    CHECK_THROWS_AS(CountSketch(1, 24, m61, 16, Splitter::Pow2, 1), std::invalid_argument);
    CHECK_THROWS_AS(CountSketch(1, 32, m31, 16, Splitter::Pow2, 1), std::invalid_argument);
    CHECK_NOTHROW(CountSketch(1, 16, m31, 16, Splitter::Pow2, 1));
    // arbitrary widths stop at half the hash range
    CHECK_THROWS_AS(CountSketch(1, 17, m31, 16, Splitter::MersenneArb, 1),
                    std::invalid_argument);
    CHECK_NOTHROW(CountSketch(1, 16, m31, 16, Splitter::MersenneArb, 1));
    // key domain errors propagate from the hash family
    CHECK_THROWS_WITH_AS(CountSketch(1, 4, m31, 32, Splitter::Pow2, 1),
                         "modulus too small for key domain", std::invalid_argument);
    CountSketch sk(1, 4, m31, 16, Splitter::Pow2, 1);
    CHECK_THROWS_WITH_AS(sk.process(16, 1), "key outside domain", std::domain_error);
    CHECK_THROWS_AS(sk.point_query(16), std::domain_error);
}

TEST_SUITE_END();
