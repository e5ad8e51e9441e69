#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "mersenne/cli.hpp"
#include "mersenne/field.hpp"
#include "mersenne/polyhash.hpp"
#include "mersenne/prng.hpp"

namespace mersenne::cli {

namespace {

constexpr int kWarmupReps = 3;
constexpr int kMeasuredReps = 5;

// Salt decouples the benchmark key stream from the coefficient draws, which
// use the bare seed.
constexpr u64 kKeyStreamSalt = 0x7b5bad595e238e31ULL;

// Runs `body` (which returns its fold of all computed values) through warm-up
// and measured repetitions and keeps the median time.
template <typename LoopBody>
BenchRow time_loop(std::string op, unsigned b, unsigned k, u64 n, LoopBody&& body) {
    std::array<double, kMeasuredReps> samples{};
    u64 checksum = 0;
    for (int rep = 0; rep < kWarmupReps + kMeasuredReps; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        checksum = body();
        const auto stop = std::chrono::steady_clock::now();
        if (rep >= kWarmupReps) {
            samples[size_t(rep - kWarmupReps)] =
                std::chrono::duration<double, std::milli>(stop - start).count();
        }
    }
    std::sort(samples.begin(), samples.end());
    BenchRow row;
    row.op = std::move(op);
    row.b = b;
    row.k = k;
    row.n = n;
    row.ms = std::max(samples[kMeasuredReps / 2], 1e-6);  // clock floor keeps elapsed positive
    row.ops_per_sec = double(n) * 1000.0 / row.ms;
    row.checksum = checksum;
    return row;
}

// 32-bit keys exercise the classic word-halving setup at b == 61; otherwise
// the widest power-of-two domain with 2u - 1 <= p, capped at one machine word.
unsigned bench_key_bits(unsigned b) {
    if (b == 61) return 32;
    if (b > 64) return 64;
    return b - 1;
}

}  // namespace

nlohmann::json to_json(const BenchRow& row) {
    return nlohmann::json{{"op", row.op},
                          {"b", row.b},
                          {"k", row.k},
                          {"n", row.n},
                          {"ms", row.ms},
                          {"ops_per_sec", row.ops_per_sec},
                          {"checksum", row.checksum}};
}

std::string csv_header() { return "op,b,k,n,ms,ops_per_sec,checksum"; }

std::string csv_row(const BenchRow& row) {
    std::ostringstream line;
    line << row.op << ',' << row.b << ',' << row.k << ',' << row.n << ',' << row.ms << ','
         << row.ops_per_sec << ',' << row.checksum;
    return line.str();
}

unsigned parse_prime_exponent(const std::string& text) {
    const auto fail = [&] {
        throw std::invalid_argument("prime must be written like 2^61-1, got '" + text + "'");
    };
    if (text.size() < 6 || text.compare(0, 2, "2^") != 0 ||
        text.compare(text.size() - 2, 2, "-1") != 0)
        fail();
    const char* first = text.data() + 2;
    const char* last = text.data() + text.size() - 2;
    unsigned exponent = 0;
    auto [end, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc{} || end != last || exponent < 2 || exponent > 127) fail();
    return exponent;
}

std::vector<BenchRow> bench_hash(unsigned b, unsigned k, u64 n, u64 seed) {
    if (k != 2 && k != 4 && k != 8) throw std::invalid_argument("degree must be 2, 4, or 8");
    if (n == 0) throw std::invalid_argument("iteration count must be positive");
    const MersenneModulus modulus(b, /*require_prime=*/true);
    const unsigned key_bits = bench_key_bits(b);
    const u64 key_mask = key_bits >= 64 ? ~u64(0) : (u64(1) << key_bits) - 1;
    const u128 key_domain = u128(1) << key_bits;

    std::vector<BenchRow> rows;

    const PolyHashFamily family(modulus, k, key_domain, seed);
    rows.push_back(time_loop("mersenne_hash", b, k, n, [&] {
        rng::SplitMix64 keys(seed ^ kKeyStreamSalt);
        u64 fold = 0;
        for (u64 i = 0; i < n; ++i) fold += u64(family(keys.next() & key_mask));
        return fold;
    }));

    if (k == 2) {
        const MultiplyShiftFamily baseline(key_bits, key_bits, seed);
        rows.push_back(time_loop("multiply_shift", b, k, n, [&] {
            rng::SplitMix64 keys(seed ^ kKeyStreamSalt);
            u64 fold = 0;
            for (u64 i = 0; i < n; ++i) fold += u64(baseline(keys.next() & key_mask));
            return fold;
        }));
    }

    if (b <= 63) {
        // Same polynomial evaluation, reduced with the division instruction
        // instead of the shifted fold.
        rng::SplitMix64 draw(seed);
        std::vector<u64> coefficients(k);
        for (u64& a : coefficients) a = draw.below(u64(modulus.p()));
        rows.push_back(time_loop("generic_modulo_hash", b, k, n, [&] {
            rng::SplitMix64 keys(seed ^ kKeyStreamSalt);
            const u128 p = modulus.p();
            u64 fold = 0;
            for (u64 i = 0; i < n; ++i) {
                const u64 x = keys.next() & key_mask;
                u128 y = coefficients[0];
                for (unsigned j = 1; j < k; ++j) y = (y * x + coefficients[j]) % p;
                fold += u64(y);
            }
            return fold;
        }));
    }
    return rows;
}

DivBenchResult bench_div(unsigned b, u128 c, u64 n, u64 seed) {
    if (n == 0) throw std::invalid_argument("iteration count must be positive");
    const PseudoMersenneModulus modulus(b, c);
    const unsigned input_bits = 2 * b;
    const unsigned words = (input_bits + 63) / 64;
    const UWide input_mask = UWide::mask_low(input_bits);

    // Both loops must draw the identical input stream and fold quotient and
    // remainder the same way, so a silent disagreement cannot hide.
    const auto next_input = [&](rng::SplitMix64& g) {
        UWide v{};
        for (unsigned w = 0; w < words; ++w) v.limb[w] = g.next();
        return v & input_mask;
    };
    const auto fold_pair = [](u64 acc, const UWide& q, const UWide& r) {
        return acc + (q.low_u64() ^ (r.low_u64() * 0x9e3779b97f4a7c15ULL));
    };

    DivBenchResult result;
    result.branch_free = time_loop("branch_free_divmod", b, 0, n, [&] {
        rng::SplitMix64 g(seed ^ kKeyStreamSalt);
        u64 fold = 0;
        for (u64 i = 0; i < n; ++i) {
            const UWide v = next_input(g);
            const UWide q = pseudo_mersenne_div(v, modulus);
            const UWide r = pseudo_mersenne_mod(v, q, modulus);
            fold = fold_pair(fold, q, r);
        }
        return fold;
    });
    result.cascade = time_loop("cascade_divmod", b, 0, n, [&] {
        rng::SplitMix64 g(seed ^ kKeyStreamSalt);
        u64 fold = 0;
        for (u64 i = 0; i < n; ++i) {
            const UWide v = next_input(g);
            const DivMod dm = cch_divmod(v, modulus);
            fold = fold_pair(fold, dm.quotient, dm.remainder);
        }
        return fold;
    });
    result.ratio = result.cascade.ms / result.branch_free.ms;
    result.checksums_match = result.branch_free.checksum == result.cascade.checksum;
    return result;
}

}  // namespace mersenne::cli
