#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mersenne/rational.hpp"
#include "mersenne/sketch.hpp"

namespace mersenne {

// ---------------------------------------------------------------------------
// Budget: enumerations refuse deterministically when their operation estimate
// exceeds seconds * kBudgetOpsPerSecond.  The decision never reads a clock, so
// a given configuration is either always admitted or always refused.
// ---------------------------------------------------------------------------

constexpr u64 kBudgetOpsPerSecond = 5'000'000;

struct EnumBudget {
    double seconds = 120.0;
};

class BudgetError : public std::runtime_error {
public:
    BudgetError(u128 required, u128 allowed);
    u128 required_ops;
    u128 allowed_ops;
};

void require_budget(u128 estimated_ops, const EnumBudget& budget);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct BoundCheck {
    std::string name;
    Rat value;
    Rat bound;
    std::string relation;  // "==", "<", "<="
    bool pass;
};

struct EnumerationReport {
    std::string title;
    nlohmann::json config;
    std::vector<BoundCheck> checks;

    bool pass() const;
    void add(std::string name, const Rat& value, const Rat& bound, std::string relation);
    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Collision enumeration over every coefficient vector of a degree-(k-1)
// polynomial mod a small prime.  The hash values are bucketed by the chosen
// scheme; the resulting counts are exact.
// ---------------------------------------------------------------------------

enum class BucketScheme {
    LowBits,      // value & (r - 1); r must be a power of two
    TopBits,      // value >> (bit_length(p) - log2(r)); r a power of two
    MersenneMap,  // ((value + 1) r) >> bit_length(p)
};

struct CollisionSpec {
    u64 modulus;       // small prime p; hash values live in [p]
    unsigned degree;   // number of coefficients k
    u64 buckets;       // r
    BucketScheme scheme;
    u128 x = 0;        // fixed distinct keys
    u128 y = 1;
    int threads = 1;
};

struct CollisionResult {
    Rat collision;                       // Pr[bucket(h(x)) = bucket(h(y))]
    std::vector<Rat> index_distribution; // exact marginal of bucket(h(x))
};

CollisionResult enum_collision(const CollisionSpec& spec, const EnumBudget& budget = {});

// ---------------------------------------------------------------------------
// Bit bias: exact Pr[bit j = 1] for a uniform value in [modulus].
// ---------------------------------------------------------------------------

std::vector<Rat> enum_bit_bias(u64 modulus);  // modulus <= 2^20

// ---------------------------------------------------------------------------
// Splitter index distribution for a uniform hash value: preimage counts per
// bucket, the zero-bucket marginal, and the pair collision probability.
// ---------------------------------------------------------------------------

struct SplitterDistribution {
    std::vector<u64> counts;  // m_i per bucket
    u64 domain;               // 2^b for the uniform splitter, 2^b - 1 otherwise
    Rat zero_bucket;          // counts[0] / domain
    Rat pair_collision;       // sum m_i^2 / domain^2
};

SplitterDistribution enum_splitter_distribution(unsigned b, u64 r, Splitter splitter);

// ---------------------------------------------------------------------------
// Sign near-cancellation: over every degree-1 coefficient pair mod p, with
// A = [bucket(h(x)) = bucket(h(y))], the signed expectation E[s_x A] equals
// E[A | index(h(x)) = anchor] / p, where the anchor is the all-ones index for
// the power-of-two splitter and index 0 for the shifted splitter.
// ---------------------------------------------------------------------------

struct SignCancellation {
    Rat lhs;  // E[s_x A]
    Rat rhs;  // E[A | i_x = anchor] / p
};

SignCancellation enum_sign_cancellation(unsigned b, u64 buckets, Splitter splitter, u128 x = 0,
                                        u128 y = 1);

// ---------------------------------------------------------------------------
// Sketch moment enumeration: over all p^4 degree-3 coefficient vectors build
// the one-row sketch of the given stream and accumulate X = sum C_i^2 and X^2
// exactly.  The parallel kernel must reproduce the serial sums bit for bit.
// ---------------------------------------------------------------------------

struct MomentSpec {
    unsigned b;     // Mersenne exponent; p = 2^b - 1 stays budget-sized
    u128 key_domain;
    u64 buckets;
    Splitter splitter;
    std::vector<std::pair<u128, i64>> stream;  // distinct keys with weights
    int threads = 1;
};

struct MomentSums {
    u128 sum_x = 0;
    u128 sum_x_sq = 0;
    u64 families = 0;
    friend bool operator==(const MomentSums&, const MomentSums&) = default;
};

MomentSums enum_moment_sums_serial(const MomentSpec& spec);
MomentSums enum_moment_sums_parallel(const MomentSpec& spec, int threads);

EnumerationReport enum_sketch_moments(const MomentSpec& spec, const EnumBudget& budget = {});

// ---------------------------------------------------------------------------
// Map uniformity scan: exhaustively checks that every bucket map keeps
// preimage sizes within one of each other, for all widths and bucket counts
// up to the caps.  Returns combination and violation counts.
// ---------------------------------------------------------------------------

struct UniformityScan {
    unsigned max_b = 16;
    u64 max_r = 64;
};

struct UniformityResult {
    u64 combinations = 0;
    u64 violations = 0;
    friend bool operator==(const UniformityResult&, const UniformityResult&) = default;
};

UniformityResult scan_map_uniformity_serial(const UniformityScan& scan);
UniformityResult scan_map_uniformity_parallel(const UniformityScan& scan, int threads);

// ---------------------------------------------------------------------------
// Division fuzzing against an arbitrary-precision oracle.  Each trial draws
// (b, c, m, v) with v inside the proven domain, compares quotient and
// remainder to the oracle, and checks the one-step-early undershoot bound and
// the one-step-late fixpoint.
// ---------------------------------------------------------------------------

struct FuzzReport {
    u64 trials = 0;
    u64 failures = 0;
    std::vector<std::string> repro;  // first few failing tuples
    nlohmann::json to_json() const;
};

FuzzReport fuzz_division(u64 trials, u64 seed);

// ---------------------------------------------------------------------------
// Named suites used by the command line.  Every report's checks must pass on
// an unmodified build.
// ---------------------------------------------------------------------------

struct SuiteOptions {
    double budget_seconds = 120.0;
    u64 trials = 100000;
    u64 seed = 1;
    int threads = 1;
};

std::vector<EnumerationReport> run_collision_suite(const SuiteOptions& opt);
std::vector<EnumerationReport> run_moment_suite(const SuiteOptions& opt);
std::vector<EnumerationReport> run_bits_suite(const SuiteOptions& opt);
std::vector<EnumerationReport> run_division_suite(const SuiteOptions& opt);

}  // namespace mersenne
