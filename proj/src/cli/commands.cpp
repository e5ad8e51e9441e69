#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mersenne/cli.hpp"
#include "mersenne/field.hpp"
#include "mersenne/rational.hpp"
#include "mersenne/sketch.hpp"
#include "mersenne/verify.hpp"

namespace mersenne::cli {

namespace {

struct HashOpts {
    std::string prime = "2^61-1";
    unsigned k = 4;
    u64 n = 10'000'000;
    u64 seed = 1;
    std::string format = "json";
};

struct DivOpts {
    unsigned b = 61;
    u64 c = 1;
    u64 n = 10'000'000;
    u64 seed = 1;
    std::string format = "json";
};

struct SketchOpts {
    u64 width = 1024;
    unsigned rows = 1;
    std::string prime = "2^61-1";
    u64 seed = 1;
    unsigned key_bits = 32;
    std::string splitter = "pow2";
    std::string input;
    std::string queries;
    std::string save;
    std::string load;
    bool f2_median = false;
};

struct VerifyOpts {
    std::string suite = "all";
    double budget = 120.0;
    u64 trials = 100'000;
    u64 seed = 1;
    int threads = 1;
};

int do_bench_hash(const HashOpts& o, std::ostream& out) {
    const unsigned b = parse_prime_exponent(o.prime);
    const std::vector<BenchRow> rows = bench_hash(b, o.k, o.n, o.seed);
    if (o.format == "csv") {
        out << csv_header() << "\n";
        for (const BenchRow& row : rows) out << csv_row(row) << "\n";
    } else {
        nlohmann::json j = nlohmann::json::array();
        for (const BenchRow& row : rows) j.push_back(to_json(row));
        out << j.dump(2) << "\n";
    }
    return 0;
}

int do_bench_div(const DivOpts& o, std::ostream& out) {
    const DivBenchResult r = bench_div(o.b, u128(o.c), o.n, o.seed);
    if (o.format == "csv") {
        out << csv_header() << "\n"
            << csv_row(r.branch_free) << "\n"
            << csv_row(r.cascade) << "\n";
    } else {
        const nlohmann::json j{
            {"b", o.b},
            {"c", o.c},
            {"n", o.n},
            {"ratio", r.ratio},
            {"checksums_match", r.checksums_match},
            {"results", nlohmann::json::array({to_json(r.branch_free), to_json(r.cascade)})}};
        out << j.dump(2) << "\n";
    }
    return 0;
}

Splitter parse_splitter(const std::string& name) {
    if (name == "pow2") return Splitter::Pow2;
    if (name == "uniform") return Splitter::UniformArb;
    if (name == "mersenne") return Splitter::MersenneArb;
    throw std::invalid_argument("splitter must be pow2, uniform, or mersenne");
}

std::runtime_error stream_error(u64 line_no, const std::string& message) {
    return std::runtime_error("line " + std::to_string(line_no) + ": " + message);
}

u64 parse_u64_full(std::string_view token) {
    u64 value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size())
        throw std::invalid_argument("not an unsigned decimal");
    return value;
}

// One "key delta" pair per line; blank lines are skipped.
std::vector<std::pair<u128, i64>> parse_stream(std::istream& source, u128 key_domain) {
    std::vector<std::pair<u128, i64>> entries;
    std::string line;
    u64 line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string key_token;
        std::string delta_token;
        std::string extra;
        if (!(fields >> key_token)) continue;
        if (!(fields >> delta_token)) throw stream_error(line_no, "expected 'key delta'");
        if (fields >> extra)
            throw stream_error(line_no, "unexpected trailing token '" + extra + "'");

        u64 key = 0;
        try {
            key = parse_u64_full(key_token);
        } catch (const std::invalid_argument&) {
            throw stream_error(line_no, "malformed key '" + key_token + "'");
        }

        std::string_view delta_view = delta_token;
        if (!delta_view.empty() && delta_view.front() == '+') delta_view.remove_prefix(1);
        i64 delta = 0;
        const auto [end, ec] =
            std::from_chars(delta_view.data(), delta_view.data() + delta_view.size(), delta);
        if (ec != std::errc{} || end != delta_view.data() + delta_view.size() ||
            delta_view.empty())
            throw stream_error(line_no, "malformed delta '" + delta_token + "'");

        if (u128(key) >= key_domain)
            throw stream_error(line_no,
                               "key " + key_token + " is outside the configured key domain");
        entries.emplace_back(u128(key), delta);
    }
    return entries;
}

std::vector<u128> parse_queries(const std::string& text, u128 key_domain) {
    std::vector<u128> keys;
    if (text.empty()) return keys;
    size_t pos = 0;
    while (true) {
        const size_t comma = text.find(',', pos);
        const std::string token =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        u64 key = 0;
        try {
            key = parse_u64_full(token);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("malformed query key '" + token + "'");
        }
        if (u128(key) >= key_domain)
            throw std::invalid_argument("query key " + token +
                                        " is outside the configured key domain");
        keys.push_back(u128(key));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return keys;
}

int do_sketch(const SketchOpts& o, std::istream& in, std::ostream& out) {
    std::optional<CountSketch> sketch;
    if (!o.load.empty()) {
        std::ifstream state(o.load, std::ios::binary);
        if (!state) throw std::runtime_error("cannot open sketch state file '" + o.load + "'");
        const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(state)),
                                         std::istreambuf_iterator<char>());
        sketch.emplace(CountSketch::deserialize(bytes));
    } else {
        const unsigned b = parse_prime_exponent(o.prime);
        const MersenneModulus modulus(b, /*require_prime=*/true);
        if (o.key_bits == 0 || o.key_bits > 64)
            throw std::invalid_argument("key width must be between 1 and 64 bits");
        sketch.emplace(o.rows, o.width, modulus, u128(1) << o.key_bits,
                       parse_splitter(o.splitter), o.seed);
    }

    std::ifstream file_stream;
    std::istream* source = &in;
    if (!o.input.empty()) {
        file_stream.open(o.input);
        if (!file_stream) throw std::runtime_error("cannot open input file '" + o.input + "'");
        source = &file_stream;
    }
    const auto entries = parse_stream(*source, sketch->key_domain());
    for (const auto& [key, delta] : entries) sketch->process(key, delta);

    const auto queries = parse_queries(o.queries, sketch->key_domain());
    const CountSketch::Moment moment = sketch->second_moment(o.f2_median);

    nlohmann::json query_rows = nlohmann::json::array();
    for (const u128 key : queries)
        query_rows.push_back(
            {{"key", to_decimal(key)}, {"estimate", sketch->point_query(key)}});

    nlohmann::json j{{"width", sketch->width()},
                     {"rows", sketch->rows()},
                     {"b", sketch->modulus().b()},
                     {"processed", entries.size()},
                     {"f2", to_decimal(moment.value)},
                     {"f2_saturated", moment.saturated},
                     {"queries", query_rows}};
    if (!o.save.empty()) {
        const std::vector<uint8_t> bytes = sketch->serialize();
        std::ofstream state(o.save, std::ios::binary);
        state.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!state) throw std::runtime_error("cannot write sketch state file '" + o.save + "'");
        j["saved"] = o.save;
    }
    out << j.dump(2) << "\n";
    return 0;
}

int do_verify(const VerifyOpts& o, std::ostream& out) {
    SuiteOptions options;
    options.budget_seconds = o.budget;
    options.trials = o.trials;
    options.seed = o.seed;
    options.threads = o.threads;

    using SuiteRunner = std::vector<EnumerationReport> (*)(const SuiteOptions&);
    const std::array<std::pair<const char*, SuiteRunner>, 4> table{{
        {"collision", &run_collision_suite},
        {"moments", &run_moment_suite},
        {"bits", &run_bits_suite},
        {"division", &run_division_suite},
    }};

    nlohmann::json suites = nlohmann::json::array();
    bool all_pass = true;
    bool matched = false;
    for (const auto& [name, runner] : table) {
        if (o.suite != "all" && o.suite != name) continue;
        matched = true;
        const std::vector<EnumerationReport> reports = runner(options);
        bool suite_pass = true;
        nlohmann::json report_rows = nlohmann::json::array();
        for (const EnumerationReport& report : reports) {
            suite_pass = suite_pass && report.pass();
            report_rows.push_back(report.to_json());
        }
        suites.push_back({{"name", name}, {"pass", suite_pass}, {"reports", report_rows}});
        all_pass = all_pass && suite_pass;
    }
    if (!matched) throw std::invalid_argument("unknown suite '" + o.suite + "'");

    out << nlohmann::json{{"pass", all_pass}, {"suites", suites}}.dump(2) << "\n";
    return all_pass ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Hashing, sketching, and division over Mersenne and pseudo-Mersenne moduli",
                 "mersenne"};
    app.require_subcommand(1);

    HashOpts hash_opts;
    DivOpts div_opts;
    SketchOpts sketch_opts;
    VerifyOpts verify_opts;
    int code = 0;

    CLI::App* bench = app.add_subcommand("bench", "Timed micro-benchmarks with checksums");
    bench->require_subcommand(1);

    CLI::App* hash = bench->add_subcommand("hash", "Polynomial hashing throughput");
    hash->add_option("--prime", hash_opts.prime, "Mersenne prime written like 2^61-1");
    hash->add_option("--k", hash_opts.k, "Family degree (2, 4, or 8)");
    hash->add_option("--n", hash_opts.n, "Hash evaluations per repetition");
    hash->add_option("--seed", hash_opts.seed, "Seed for coefficients and the key stream");
    hash->add_option("--format", hash_opts.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    hash->callback([&] { code = do_bench_hash(hash_opts, out); });

    CLI::App* div = bench->add_subcommand("div", "Quotient/remainder throughput over 2^b - c");
    div->add_option("--b", div_opts.b, "Bit width of the modulus 2^b - c");
    div->add_option("--c", div_opts.c, "Offset c of the modulus 2^b - c");
    div->add_option("--n", div_opts.n, "Divisions per repetition");
    div->add_option("--seed", div_opts.seed, "Seed for the input stream");
    div->add_option("--format", div_opts.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    div->callback([&] { code = do_bench_div(div_opts, out); });

    CLI::App* sketch = app.add_subcommand("sketch", "Count sketch over a key/delta stream");
    sketch->add_option("--width", sketch_opts.width, "Buckets per row");
    sketch->add_option("--rows", sketch_opts.rows, "Independent rows");
    sketch->add_option("--prime", sketch_opts.prime, "Row hash modulus, written like 2^61-1");
    sketch->add_option("--seed", sketch_opts.seed, "Master seed for the row families");
    sketch->add_option("--key-bits", sketch_opts.key_bits, "Key domain is [0, 2^key-bits)");
    sketch->add_option("--splitter", sketch_opts.splitter,
                       "How one hash value yields bucket and sign")
        ->check(CLI::IsMember({"pow2", "uniform", "mersenne"}));
    sketch->add_option("--input", sketch_opts.input, "Read the stream from a file, not stdin");
    sketch->add_option("--queries", sketch_opts.queries, "Comma-separated keys to point-query");
    sketch->add_option("--save", sketch_opts.save, "Write the sketch state to a file");
    sketch->add_option("--load", sketch_opts.load,
                       "Resume from a saved state (ignores the config flags)");
    sketch->add_flag("--f2-median", sketch_opts.f2_median,
                     "Median of per-row moments instead of row 0");
    sketch->callback([&] { code = do_sketch(sketch_opts, in, out); });

    CLI::App* verify = app.add_subcommand("verify", "Exhaustive enumeration check suites");
    verify->add_option("--suite", verify_opts.suite, "Which suite to run")
        ->check(CLI::IsMember({"all", "collision", "moments", "division", "bits"}));
    verify->add_option("--budget", verify_opts.budget, "Enumeration budget in seconds");
    verify->add_option("--trials", verify_opts.trials, "Randomized trial count floor");
    verify->add_option("--seed", verify_opts.seed, "Seed for randomized trials");
    verify->add_option("--threads", verify_opts.threads, "Worker threads for enumeration");
    verify->callback([&] { code = do_verify(verify_opts, out); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}

}  // namespace mersenne::cli
