#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mersenne/uwide.hpp"

namespace mersenne::cli {

// One timed benchmark loop.  `ms` is the median wall time across the measured
// repetitions; `checksum` folds every computed value so the loop cannot be
// optimized away and so reruns with the same seed can be compared exactly.
struct BenchRow {
    std::string op;
    unsigned b = 0;
    unsigned k = 0;  // polynomial degree for hash rows, 0 for division rows
    u64 n = 0;
    double ms = 0.0;
    double ops_per_sec = 0.0;
    u64 checksum = 0;
};

nlohmann::json to_json(const BenchRow& row);

// Fixed column set shared by every benchmark: op,b,k,n,ms,ops_per_sec,checksum
std::string csv_header();
std::string csv_row(const BenchRow& row);

// Accepts exactly the literal form "2^<e>-1" with 2 <= e <= 127 and returns e.
unsigned parse_prime_exponent(const std::string& text);

// Times degree-k Horner hashing over 2^b - 1 on n fixed-seed pseudorandom
// keys (32-bit keys when b == 61, otherwise as wide as the field permits).
// Adds a hardware-remainder Horner baseline when coefficients fit a machine
// word and a multiply-shift baseline when k == 2.
std::vector<BenchRow> bench_hash(unsigned b, unsigned k, u64 n, u64 seed);

struct DivBenchResult {
    BenchRow branch_free;
    BenchRow cascade;
    double ratio = 0.0;  // cascade ms / branch-free ms; > 1 means the branch-free path wins
    bool checksums_match = false;
};

// Times n quotient+remainder computations over 2^b - c on pseudorandom
// 2b-bit inputs, once through the fixed-round branch-free divider and once
// through the subtract-loop baseline.  Both loops fold identical checksums.
DivBenchResult bench_div(unsigned b, u128 c, u64 n, u64 seed);

// Entry point shared by the installed binary and the in-process tests.
// Returns the process exit code; all I/O goes through the given streams.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace mersenne::cli
