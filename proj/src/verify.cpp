#include "mersenne/verify.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "mersenne/bucketing.hpp"
#include "mersenne/field.hpp"
#include "mersenne/prng.hpp"

namespace mersenne {

namespace {

// ---------------------------------------------------------------------------
// 128-bit helpers shared by the rational type and the enumerators.
// ---------------------------------------------------------------------------

u128 gcd128(u128 a, u128 b) {
    while (b) {
        u128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u128 magnitude_of(i128 v) { return v < 0 ? u128(0) - u128(v) : u128(v); }

i128 signed_of(bool negative, u128 mag) {
    if (mag == 0) return 0;
    if (negative) {
        detail::hard_assert(mag <= (u128(1) << 127), "rational magnitude overflow");
        return -i128(mag - 1) - 1;
    }
    detail::hard_assert(mag < (u128(1) << 127), "rational magnitude overflow");
    return i128(mag);
}

i128 mul_checked(i128 a, u128 b) {
    UWide prod = wide_mul(UWide::of_u128(magnitude_of(a)), UWide::of_u128(b));
    detail::hard_assert(prod.fits_u128(), "rational magnitude overflow");
    return signed_of(a < 0, prod.low_u128());
}

u128 mul_u128_checked(u128 a, u128 b) {
    UWide prod = wide_mul(UWide::of_u128(a), UWide::of_u128(b));
    detail::hard_assert(prod.fits_u128(), "rational denominator overflow");
    return prod.low_u128();
}

i128 add_checked(i128 a, i128 b) {
    i128 out;
    detail::hard_assert(!__builtin_add_overflow(a, b, &out), "rational magnitude overflow");
    return out;
}

i128 sub_checked(i128 a, i128 b) {
    i128 out;
    detail::hard_assert(!__builtin_sub_overflow(a, b, &out), "rational magnitude overflow");
    return out;
}

// Saturating power used only for budget estimates; the cap is far beyond any
// budget a caller can grant, so saturation always ends in a refusal.
u128 pow_saturating(u64 base, unsigned exp) {
    const u128 cap = u128(1) << 120;
    u128 r = 1;
    for (unsigned i = 0; i < exp; ++i) {
        if (base > 1 && r > cap / base) return cap;
        r *= base;
    }
    return r;
}

u128 mul_saturating(u128 a, u128 b) {
    const u128 cap = u128(1) << 124;
    if (b != 0 && a > cap / b) return cap;
    return a * b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decimal formatting
// ---------------------------------------------------------------------------

std::string to_decimal(u128 v) {
    if (v == 0) return "0";
    char buf[40];
    size_t i = sizeof buf;
    while (v) {
        buf[--i] = char('0' + unsigned(v % 10));
        v /= 10;
    }
    return std::string(buf + i, buf + sizeof buf);
}

std::string to_decimal(i128 v) {
    if (v < 0) return "-" + to_decimal(magnitude_of(v));
    return to_decimal(u128(v));
}

// ---------------------------------------------------------------------------
// Rat
// ---------------------------------------------------------------------------

Rat::Rat(i128 numerator, u128 denominator) {
    if (denominator == 0) throw std::invalid_argument("rational denominator must be nonzero");
    u128 mag = magnitude_of(numerator);
    if (mag == 0) return;  // already 0/1
    u128 g = gcd128(mag, denominator);
    num_ = signed_of(numerator < 0, mag / g);
    den_ = denominator / g;
}

Rat Rat::operator+(const Rat& o) const {
    u128 g = gcd128(den_, o.den_);
    u128 da = den_ / g, db = o.den_ / g;
    i128 n = add_checked(mul_checked(num_, db), mul_checked(o.num_, da));
    return Rat(n, mul_u128_checked(den_, db));
}

Rat Rat::operator-(const Rat& o) const {
    u128 g = gcd128(den_, o.den_);
    u128 da = den_ / g, db = o.den_ / g;
    i128 n = sub_checked(mul_checked(num_, db), mul_checked(o.num_, da));
    return Rat(n, mul_u128_checked(den_, db));
}

Rat Rat::operator*(const Rat& o) const {
    u128 am = magnitude_of(num_), bm = magnitude_of(o.num_);
    if (am == 0 || bm == 0) return Rat();
    u128 g1 = gcd128(am, o.den_), g2 = gcd128(bm, den_);
    Rat r;
    r.num_ = signed_of((num_ < 0) != (o.num_ < 0), mul_u128_checked(am / g1, bm / g2));
    r.den_ = mul_u128_checked(den_ / g2, o.den_ / g1);
    return r;
}

std::strong_ordering operator<=>(const Rat& a, const Rat& b) {
    bool an = a.num_ < 0, bn = b.num_ < 0;
    if (an != bn) return an ? std::strong_ordering::less : std::strong_ordering::greater;
    UWide lhs = wide_mul(UWide::of_u128(magnitude_of(a.num_)), UWide::of_u128(b.den_));
    UWide rhs = wide_mul(UWide::of_u128(magnitude_of(b.num_)), UWide::of_u128(a.den_));
    std::strong_ordering ord = lhs <=> rhs;
    if (!an) return ord;
    if (ord == std::strong_ordering::less) return std::strong_ordering::greater;
    if (ord == std::strong_ordering::greater) return std::strong_ordering::less;
    return std::strong_ordering::equal;
}

std::string Rat::str() const {
    std::string s = to_decimal(num_);
    if (den_ != 1) s += "/" + to_decimal(den_);
    return s;
}

// ---------------------------------------------------------------------------
// Budget
// ---------------------------------------------------------------------------

namespace {

std::string budget_message(u128 required, u128 allowed) {
    return "enumeration budget exceeded: needs " + to_decimal(required) + " operations, budget " +
           to_decimal(allowed);
}

u128 allowed_ops_for(double seconds) {
    if (seconds <= 0) return 0;
    double ops = seconds * double(kBudgetOpsPerSecond);
    if (ops >= 1e38) return ~u128(0);
    return u128(ops);
}

}  // namespace

BudgetError::BudgetError(u128 required, u128 allowed)
    : std::runtime_error(budget_message(required, allowed)),
      required_ops(required),
      allowed_ops(allowed) {}

void require_budget(u128 estimated_ops, const EnumBudget& budget) {
    u128 allowed = allowed_ops_for(budget.seconds);
    if (estimated_ops > allowed) throw BudgetError(estimated_ops, allowed);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

bool relation_holds(const Rat& value, const Rat& bound, const std::string& relation) {
    if (relation == "==") return value == bound;
    if (relation == "<") return value < bound;
    if (relation == "<=") return value <= bound;
    throw std::invalid_argument("unknown relation: " + relation);
}

nlohmann::json rat_json(const Rat& r) {
    return {{"num", to_decimal(r.num())}, {"den", to_decimal(r.den())}};
}

}  // namespace

bool EnumerationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

void EnumerationReport::add(std::string name, const Rat& value, const Rat& bound,
                            std::string relation) {
    bool ok = relation_holds(value, bound, relation);
    checks.push_back({std::move(name), value, bound, std::move(relation), ok});
}

nlohmann::json EnumerationReport::to_json() const {
    nlohmann::json out;
    out["title"] = title;
    out["config"] = config;
    out["pass"] = pass();
    nlohmann::json arr = nlohmann::json::array();
    for (const BoundCheck& c : checks) {
        arr.push_back({{"name", c.name},
                       {"value", rat_json(c.value)},
                       {"bound", rat_json(c.bound)},
                       {"relation", c.relation},
                       {"pass", c.pass}});
    }
    out["checks"] = arr;
    return out;
}

// ---------------------------------------------------------------------------
// Collision enumeration
// ---------------------------------------------------------------------------

namespace {

struct BucketParams {
    BucketScheme scheme;
    unsigned value_bits;
    unsigned top_shift = 0;
    u64 low_mask = 0;
    u64 r = 1;
};

u64 bucket_of(u64 v, const BucketParams& bp) {
    switch (bp.scheme) {
        case BucketScheme::LowBits:
            return v & bp.low_mask;
        case BucketScheme::TopBits:
            return v >> bp.top_shift;
        case BucketScheme::MersenneMap:
            return u64(((u128(v) + 1) * bp.r) >> bp.value_bits);
    }
    return 0;
}

struct CollisionCounts {
    u64 eq = 0;
    std::vector<u64> hist;
};

// Plain modular Horner over one leading-coefficient range.  This route shares
// no code with the hash-family classes, so their outputs can be checked
// against each other.
CollisionCounts collision_count_range(u64 p, unsigned degree, u64 xr, u64 yr,
                                      const BucketParams& bp, u64 lead_begin, u64 lead_end) {
    CollisionCounts out;
    out.hist.assign(size_t(bp.r), 0);
    std::vector<u64> coef(degree, 0);
    for (u64 lead = lead_begin; lead < lead_end; ++lead) {
        std::fill(coef.begin(), coef.end(), 0);
        coef[0] = lead;
        for (;;) {
            u64 hx = 0, hy = 0;
            for (u64 a : coef) {
                hx = (hx * xr + a) % p;
                hy = (hy * yr + a) % p;
            }
            u64 bx = bucket_of(hx, bp);
            out.eq += bx == bucket_of(hy, bp);
            ++out.hist[size_t(bx)];
            bool carried = false;
            for (size_t j = coef.size(); j-- > 1;) {
                if (++coef[j] < p) {
                    carried = true;
                    break;
                }
                coef[j] = 0;
            }
            if (!carried) break;
        }
    }
    return out;
}

BucketParams make_bucket_params(u64 p, u64 r, BucketScheme scheme) {
    if (r < 1 || r > p) throw std::invalid_argument("bucket count must be in [1, p]");
    BucketParams bp;
    bp.scheme = scheme;
    bp.r = r;
    bp.value_bits = unsigned(std::bit_width(p));
    if (scheme == BucketScheme::LowBits || scheme == BucketScheme::TopBits) {
        if ((r & (r - 1)) != 0) {
            throw std::invalid_argument("bucket count must be a power of two for this scheme");
        }
        unsigned rl = unsigned(std::bit_width(r)) - 1;
        bp.low_mask = r - 1;
        bp.top_shift = bp.value_bits - rl;
    }
    return bp;
}

}  // namespace

CollisionResult enum_collision(const CollisionSpec& spec, const EnumBudget& budget) {
    if (spec.modulus < 2) throw std::invalid_argument("modulus must be at least 2");
    if (spec.degree < 1 || spec.degree > 16) {
        throw std::invalid_argument("degree must be in [1, 16]");
    }
    u64 p = spec.modulus;
    u64 xr = u64(spec.x % p), yr = u64(spec.y % p);
    if (xr == yr) throw std::invalid_argument("keys must be distinct modulo the modulus");
    BucketParams bp = make_bucket_params(p, spec.buckets, spec.scheme);

    u128 total = pow_saturating(p, spec.degree);
    require_budget(mul_saturating(total, 2 * spec.degree + 4), budget);
    detail::hard_assert(total < (u128(1) << 63), "enumeration exceeds 64-bit counters");

    int threads = std::max(1, spec.threads);
    CollisionCounts sum;
    if (threads <= 1) {
        sum = collision_count_range(p, spec.degree, xr, yr, bp, 0, p);
    } else {
        std::vector<CollisionCounts> parts(p);
#pragma omp parallel for schedule(static) num_threads(threads)
        for (i64 lead = 0; lead < i64(p); ++lead) {
            parts[size_t(lead)] =
                collision_count_range(p, spec.degree, xr, yr, bp, u64(lead), u64(lead) + 1);
        }
        sum.hist.assign(size_t(spec.buckets), 0);
        for (const CollisionCounts& part : parts) {
            sum.eq += part.eq;
            for (size_t i = 0; i < sum.hist.size(); ++i) sum.hist[i] += part.hist[i];
        }
    }

    CollisionResult res;
    res.collision = Rat(i128(sum.eq), total);
    res.index_distribution.reserve(sum.hist.size());
    for (u64 h : sum.hist) res.index_distribution.push_back(Rat(i128(h), total));
    return res;
}

// ---------------------------------------------------------------------------
// Bit bias
// ---------------------------------------------------------------------------

std::vector<Rat> enum_bit_bias(u64 modulus) {
    if (modulus < 2) throw std::invalid_argument("modulus must be at least 2");
    if (modulus > (u64(1) << 20)) throw std::invalid_argument("modulus too large to enumerate");
    unsigned bits = unsigned(std::bit_width(modulus - 1));
    std::vector<Rat> out;
    out.reserve(bits);
    for (unsigned j = 0; j < bits; ++j) {
        u64 period = u64(1) << (j + 1);
        u64 half = u64(1) << j;
        u64 rem = modulus % period;
        u64 count = (modulus / period) * half + (rem > half ? rem - half : 0);
        out.push_back(Rat(i128(count), modulus));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitter distribution
// ---------------------------------------------------------------------------

namespace {

SignIndexPair apply_splitter(u128 h, unsigned b, u64 r, Splitter splitter) {
    switch (splitter) {
        case Splitter::Pow2:
            return split_pow2(h, b, unsigned(std::bit_width(r)) - 1);
        case Splitter::UniformArb:
            return split_arb_uniform(h, b, r);
        case Splitter::MersenneArb:
            return split_arb_mersenne(h, b, r);
    }
    throw std::invalid_argument("unknown splitter");
}

void validate_splitter_width(unsigned b, u64 r, Splitter splitter) {
    if (r < 1) throw std::invalid_argument("bucket count must be at least 1");
    if (splitter == Splitter::Pow2 && (r & (r - 1)) != 0) {
        throw std::invalid_argument("bucket count must be a power of two for this splitter");
    }
    if (u128(r) > (u128(1) << (b - 1))) {
        throw std::invalid_argument("bucket count exceeds half the hash range");
    }
}

}  // namespace

SplitterDistribution enum_splitter_distribution(unsigned b, u64 r, Splitter splitter) {
    if (b < 2 || b > 24) throw std::invalid_argument("width must be in [2, 24]");
    validate_splitter_width(b, r, splitter);
    u64 domain = splitter == Splitter::UniformArb ? (u64(1) << b) : (u64(1) << b) - 1;
    SplitterDistribution out;
    out.domain = domain;
    out.counts.assign(size_t(r), 0);
    for (u64 h = 0; h < domain; ++h) {
        ++out.counts[size_t(apply_splitter(h, b, r, splitter).index)];
    }
    u128 sq = 0;
    for (u64 c : out.counts) sq += u128(c) * c;
    out.zero_bucket = Rat(i128(out.counts[0]), domain);
    out.pair_collision = Rat(i128(sq), u128(domain) * domain);
    return out;
}

// ---------------------------------------------------------------------------
// Sign near-cancellation
// ---------------------------------------------------------------------------

SignCancellation enum_sign_cancellation(unsigned b, u64 buckets, Splitter splitter, u128 x,
                                        u128 y) {
    if (b < 2 || b > 12) throw std::invalid_argument("width must be in [2, 12]");
    if (splitter == Splitter::UniformArb) {
        throw std::invalid_argument(
            "sign cancellation identity requires the power-of-two or shifted splitter");
    }
    validate_splitter_width(b, buckets, splitter);
    u64 p = (u64(1) << b) - 1;
    u64 xr = u64(x % p), yr = u64(y % p);
    if (xr == yr) throw std::invalid_argument("keys must be distinct modulo the modulus");

    std::vector<unsigned> idx(p);
    std::vector<int> sgn(p);
    for (u64 h = 0; h < p; ++h) {
        SignIndexPair pr = apply_splitter(h, b, buckets, splitter);
        idx[h] = unsigned(pr.index);
        sgn[h] = pr.sign;
    }
    u64 anchor = splitter == Splitter::Pow2 ? buckets - 1 : 0;

    i64 lhs_signed = 0;
    u64 joint = 0, anchored = 0;
    for (u64 a0 = 0; a0 < p; ++a0) {
        for (u64 a1 = 0; a1 < p; ++a1) {
            u64 hx = (a0 * xr + a1) % p;
            u64 hy = (a0 * yr + a1) % p;
            bool agree = idx[hx] == idx[hy];
            lhs_signed += agree ? sgn[hx] : 0;
            if (idx[hx] == anchor) {
                ++anchored;
                joint += agree;
            }
        }
    }
    SignCancellation out;
    out.lhs = Rat(i128(lhs_signed), u128(p) * p);
    out.rhs = Rat(i128(joint), u128(anchored) * p);
    return out;
}

// ---------------------------------------------------------------------------
// Sketch moment enumeration
// ---------------------------------------------------------------------------

namespace {

void validate_moment_spec(const MomentSpec& spec) {
    if (spec.b < 2 || spec.b > 31) throw std::invalid_argument("width must be in [2, 31]");
    validate_splitter_width(spec.b, spec.buckets, spec.splitter);
    u64 p = (u64(1) << spec.b) - 1;
    if (spec.key_domain < 1 || spec.key_domain > p) {
        throw std::invalid_argument("modulus too small for key domain");
    }
    if (spec.stream.empty()) throw std::invalid_argument("stream must not be empty");
    u64 weight = 0;
    for (const auto& [key, delta] : spec.stream) {
        if (key >= spec.key_domain) throw std::invalid_argument("key outside domain");
        weight += u64(delta < 0 ? -delta : delta);
        if (weight > 1024) {
            throw std::invalid_argument("stream weights too large for exact enumeration");
        }
    }
    for (size_t i = 0; i < spec.stream.size(); ++i) {
        for (size_t j = i + 1; j < spec.stream.size(); ++j) {
            if (spec.stream[i].first % p == spec.stream[j].first % p) {
                throw std::invalid_argument("stream keys must be distinct modulo the modulus");
            }
        }
    }
}

// Accumulates X = sum of squared counters and X^2 across every degree-3
// coefficient vector whose leading coefficient lies in [lead_begin, lead_end).
MomentSums moment_range(const MomentSpec& spec, const std::vector<unsigned>& idx,
                        const std::vector<int>& sgn, u64 lead_begin, u64 lead_end) {
    u64 p = (u64(1) << spec.b) - 1;
    size_t n = spec.stream.size();
    std::vector<u64> x1(n), x2(n), x3(n);
    std::vector<i64> w(n);
    for (size_t j = 0; j < n; ++j) {
        u64 x = u64(spec.stream[j].first % p);
        x1[j] = x;
        x2[j] = x * x % p;
        x3[j] = x2[j] * x % p;
        w[j] = spec.stream[j].second;
    }
    std::vector<u64> t0(n), t1(n), t2(n);
    std::vector<i64> counters(size_t(spec.buckets));
    MomentSums out;
    for (u64 a0 = lead_begin; a0 < lead_end; ++a0) {
        for (size_t j = 0; j < n; ++j) t0[j] = a0 * x3[j] % p;
        for (u64 a1 = 0; a1 < p; ++a1) {
            for (size_t j = 0; j < n; ++j) t1[j] = (t0[j] + a1 * x2[j]) % p;
            for (u64 a2 = 0; a2 < p; ++a2) {
                for (size_t j = 0; j < n; ++j) t2[j] = (t1[j] + a2 * x1[j]) % p;
                for (u64 a3 = 0; a3 < p; ++a3) {
                    std::fill(counters.begin(), counters.end(), 0);
                    for (size_t j = 0; j < n; ++j) {
                        u64 h = t2[j] + a3;
                        if (h >= p) h -= p;
                        counters[idx[h]] += sgn[h] * w[j];
                    }
                    u64 x_val = 0;
                    for (i64 c : counters) x_val += u64(c * c);
                    out.sum_x += x_val;
                    out.sum_x_sq += u128(x_val) * x_val;
                }
            }
        }
    }
    return out;
}

struct SplitTables {
    std::vector<unsigned> idx;
    std::vector<int> sgn;
};

SplitTables build_split_tables(unsigned b, u64 r, Splitter splitter) {
    u64 p = (u64(1) << b) - 1;
    SplitTables t;
    t.idx.resize(p);
    t.sgn.resize(p);
    for (u64 h = 0; h < p; ++h) {
        SignIndexPair pr = apply_splitter(h, b, r, splitter);
        t.idx[h] = unsigned(pr.index);
        t.sgn[h] = pr.sign;
    }
    return t;
}

u64 exact_family_count(const MomentSpec& spec) {
    validate_moment_spec(spec);
    if (spec.b > 15) {
        throw std::invalid_argument("width must be in [2, 15] to enumerate exactly");
    }
    u64 p = (u64(1) << spec.b) - 1;
    return p * p * p * p;
}

}  // namespace

MomentSums enum_moment_sums_serial(const MomentSpec& spec) {
    u64 families = exact_family_count(spec);
    u64 p = (u64(1) << spec.b) - 1;
    SplitTables t = build_split_tables(spec.b, spec.buckets, spec.splitter);
    MomentSums out = moment_range(spec, t.idx, t.sgn, 0, p);
    out.families = families;
    return out;
}

MomentSums enum_moment_sums_parallel(const MomentSpec& spec, int threads) {
    u64 families = exact_family_count(spec);
    u64 p = (u64(1) << spec.b) - 1;
    SplitTables t = build_split_tables(spec.b, spec.buckets, spec.splitter);
    int nthreads = std::max(1, threads);
    std::vector<MomentSums> parts(p);
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (i64 lead = 0; lead < i64(p); ++lead) {
        parts[size_t(lead)] = moment_range(spec, t.idx, t.sgn, u64(lead), u64(lead) + 1);
    }
    MomentSums out;
    for (const MomentSums& part : parts) {
        out.sum_x += part.sum_x;
        out.sum_x_sq += part.sum_x_sq;
    }
    out.families = families;
    return out;
}

EnumerationReport enum_sketch_moments(const MomentSpec& spec, const EnumBudget& budget) {
    validate_moment_spec(spec);
    u64 p = (u64(1) << spec.b) - 1;
    u128 estimate =
        mul_saturating(pow_saturating(p, 4), u128(spec.stream.size()) * 4 + spec.buckets);
    require_budget(estimate, budget);

    MomentSums sums = spec.threads > 1 ? enum_moment_sums_parallel(spec, spec.threads)
                                       : enum_moment_sums_serial(spec);

    i128 f1 = 0;
    u64 f2 = 0;
    for (const auto& [key, delta] : spec.stream) {
        f1 += delta;
        f2 += u64(delta * delta);
    }
    u128 families = u128(sums.families);
    u128 p2 = u128(p) * p;
    size_t n = spec.stream.size();

    Rat mean(i128(sums.sum_x), families);
    Rat formula(i128(f2) * i128(p2) + f1 * f1 - i128(f2), p2);
    Rat mean_tolerance(i128(u128(f2) * (n - 1)), p2);
    Rat variance = Rat(i128(sums.sum_x_sq), families) - mean * mean;
    Rat variance_bound =
        spec.splitter == Splitter::Pow2
            ? Rat(2 * i128(f2) * i128(f2), spec.buckets)
            : Rat(2 * i128(f2) * i128(f2) * i128((u128(1) << (2 * spec.b)) +
                                                 u128(spec.buckets) * spec.buckets),
                  u128(spec.buckets) << (2 * spec.b));

    const char* splitter_name = spec.splitter == Splitter::Pow2         ? "pow2"
                                : spec.splitter == Splitter::UniformArb ? "uniform"
                                                                        : "mersenne";
    nlohmann::json stream = nlohmann::json::array();
    for (const auto& [key, delta] : spec.stream) stream.push_back({to_decimal(key), delta});

    EnumerationReport report;
    report.title = "sketch second-moment enumeration";
    report.config = {{"modulus", p},          {"buckets", spec.buckets},
                     {"splitter", splitter_name}, {"stream", stream},
                     {"families", sums.families}, {"threads", std::max(1, spec.threads)}};
    report.add("mean matches exact formula", mean, formula, "==");
    report.add("mean within relative distance of F2", abs(mean - Rat::integer(i128(f2))),
               mean_tolerance, "<=");
    report.add("variance below bound", variance, variance_bound, "<=");
    return report;
}

// ---------------------------------------------------------------------------
// Map uniformity scan
// ---------------------------------------------------------------------------

namespace {

void validate_scan(const UniformityScan& scan) {
    if (scan.max_b < 2 || scan.max_b > 20) {
        throw std::invalid_argument("scan width must be in [2, 20]");
    }
    if (scan.max_r < 1) throw std::invalid_argument("scan bucket cap must be at least 1");
}

UniformityResult scan_one_width(unsigned b, u64 max_r) {
    UniformityResult res;
    auto tally = [&res](u64 domain, u64 r, auto&& map) {
        std::vector<u64> counts(size_t(r), 0);
        for (u64 v = 0; v < domain; ++v) ++counts[size_t(map(v))];
        auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
        ++res.combinations;
        res.violations += (*mx - *mn > 1);
    };
    u64 q = u64(1) << b;
    for (u64 r = 1; r <= std::min(max_r, q); ++r) {
        tally(q, r, [&](u64 v) { return u64(map_pow2(v, b, r)); });
    }
    u64 p = q - 1;
    for (u64 r = 1; r <= std::min(max_r, p); ++r) {
        tally(p, r, [&](u64 v) { return u64(map_mersenne(v, b, r)); });
    }
    for (u64 c : {u64(1), u64(3), u64(5)}) {
        if (u128(c) >= (u128(1) << (b - 1))) continue;
        PseudoMersenneModulus mod(b, c);
        u64 pc = u64(mod.p());
        for (u64 r = 1; r <= std::min(max_r, pc); ++r) {
            ExactDivisionMap dmap(mod, r);
            tally(pc, r, [&](u64 v) { return u64(dmap(v)); });
        }
    }
    return res;
}

}  // namespace

UniformityResult scan_map_uniformity_serial(const UniformityScan& scan) {
    validate_scan(scan);
    UniformityResult out;
    for (unsigned b = 2; b <= scan.max_b; ++b) {
        UniformityResult part = scan_one_width(b, scan.max_r);
        out.combinations += part.combinations;
        out.violations += part.violations;
    }
    return out;
}

UniformityResult scan_map_uniformity_parallel(const UniformityScan& scan, int threads) {
    validate_scan(scan);
    std::vector<UniformityResult> parts(scan.max_b + 1);
    int nthreads = std::max(1, threads);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (int b = 2; b <= int(scan.max_b); ++b) {
        parts[size_t(b)] = scan_one_width(unsigned(b), scan.max_r);
    }
    UniformityResult out;
    for (const UniformityResult& part : parts) {
        out.combinations += part.combinations;
        out.violations += part.violations;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Division fuzzing
// ---------------------------------------------------------------------------

namespace {

using boost::multiprecision::cpp_int;

cpp_int cpp_of(const UWide& w) {
    cpp_int v = 0;
    for (int i = 3; i >= 0; --i) {
        v <<= 64;
        v += w.limb[size_t(i)];
    }
    return v;
}

cpp_int cpp_of_u128(u128 x) { return cpp_of(UWide::of_u128(x)); }

UWide uwide_of_cpp(cpp_int v) {
    UWide r;
    for (int i = 0; i < 4; ++i) {
        r.limb[size_t(i)] = u64(v & 0xFFFFFFFFFFFFFFFFULL);
        v >>= 64;
    }
    detail::hard_assert(v == 0, "value exceeds 256-bit capacity");
    return r;
}

std::string hex_of(const UWide& w) {
    if (w.is_zero()) return "0";
    std::string out;
    bool started = false;
    for (int i = 3; i >= 0; --i) {
        char buf[17];
        if (!started) {
            if (!w.limb[size_t(i)]) continue;
            std::snprintf(buf, sizeof buf, "%llx", (unsigned long long)w.limb[size_t(i)]);
            started = true;
        } else {
            std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)w.limb[size_t(i)]);
        }
        out += buf;
    }
    return out;
}

u128 random_bits128(rng::SplitMix64& gen) { return (u128(gen.next()) << 64) | gen.next(); }

UWide random_uwide(rng::SplitMix64& gen, unsigned bits) {
    UWide r;
    for (auto& limb : r.limb) limb = gen.next();
    return r & UWide::mask_low(bits);
}

// Independent recomputation of the largest admissible dividend, in
// arbitrary precision: (q^n - d) / c^(n-1) with q = 2^b and d = c^n when c is
// a power of two, d = c q^(n-1) otherwise, clamped to 2^255 - 2^127.
cpp_int reference_max_input(unsigned b, u128 c, unsigned n) {
    cpp_int cc = cpp_of_u128(c);
    cpp_int qn = cpp_int(1) << (b * n);
    cpp_int d;
    if ((c & (c - 1)) == 0) {
        d = boost::multiprecision::pow(cc, n);
    } else {
        d = cc << (b * (n - 1));
    }
    cpp_int vm = (qn - d) / boost::multiprecision::pow(cc, n - 1);
    cpp_int clamp = (cpp_int(1) << 255) - (cpp_int(1) << 127);
    return vm > clamp ? clamp : vm;
}

}  // namespace

nlohmann::json FuzzReport::to_json() const {
    return {{"trials", trials}, {"failures", failures}, {"repro", repro}};
}

FuzzReport fuzz_division(u64 trials, u64 seed) {
    rng::SplitMix64 gen(seed);
    FuzzReport rep;
    rep.trials = trials;
    for (u64 t = 0; t < trials; ++t) {
        unsigned b = unsigned(2 + gen.below(126));
        unsigned cbits = unsigned(1 + gen.below(b - 1));
        u128 c = 1;
        if (cbits > 1) {
            u128 high = u128(1) << (cbits - 1);
            c = high | (random_bits128(gen) & (high - 1));
        }
        unsigned mode = unsigned(gen.below(4));
        unsigned m_iters = mode == 0 ? 0 : unsigned(1 + gen.below(6));
        PseudoMersenneModulus mod(b, c, m_iters);
        const UWide& vmax = mod.max_input();

        UWide v;
        bool at_boundary = false;
        switch (gen.below(8)) {
            case 0:
                v = vmax;
                at_boundary = true;
                break;
            case 1:
                v = UWide();
                break;
            case 2: {
                UWide delta(gen.below(u64(1) << 16));
                v = vmax >= delta ? vmax - delta : UWide();
                break;
            }
            default: {
                v = random_uwide(gen, unsigned(1 + gen.below(255)));
                if (v > vmax) v = uwide_of_cpp(cpp_of(v) % (cpp_of(vmax) + 1));
                break;
            }
        }

        bool ok = true;
        UWide q = pseudo_mersenne_div(v, mod);
        UWide r = pseudo_mersenne_mod(v, q, mod);
        cpp_int oracle_q = cpp_of(v) / cpp_of_u128(mod.p());
        cpp_int oracle_r = cpp_of(v) % cpp_of_u128(mod.p());
        ok = ok && cpp_of(q) == oracle_q && cpp_of(r) == oracle_r;

        if (mod.iterations() >= 2) {
            cpp_int undershoot = oracle_q - cpp_of(mod.div_unchecked(v, mod.iterations() - 1));
            ok = ok && (undershoot == 0 || undershoot == 1);
        }
        ok = ok && cpp_of(mod.div_unchecked(v, mod.iterations() + 1)) == oracle_q;

        if (at_boundary) {
            bool rejected = false;
            try {
                pseudo_mersenne_div(vmax + UWide(1), mod);
            } catch (const std::domain_error&) {
                rejected = true;
            }
            ok = ok && rejected;
        }

        if (c == 1 && v.bit_length() <= int(2 * b)) {
            DivMod dm = mersenne_divmod(v, MersenneModulus(b));
            ok = ok && dm.quotient == q && dm.remainder == r;
        }

        if (t % 16 == 0) {
            ok = ok && cpp_of(vmax) == reference_max_input(b, c, mod.iterations());
        }

        if (!ok) {
            ++rep.failures;
            if (rep.repro.size() < 8) {
                std::ostringstream os;
                os << "b=" << b << " c=0x" << hex_of(UWide::of_u128(c)) << " m="
                   << mod.iterations() << " v=0x" << hex_of(v);
                rep.repro.push_back(os.str());
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

namespace {

std::string with_params(const std::string& base, unsigned b, u64 r) {
    std::ostringstream os;
    os << base << " (b=" << b << ", r=" << r << ")";
    return os.str();
}

}  // namespace

std::vector<EnumerationReport> run_collision_suite(const SuiteOptions& opt) {
    EnumBudget budget{opt.budget_seconds};
    std::vector<EnumerationReport> out;

    {
        EnumerationReport rep;
        rep.title = "pairwise hash collisions into low-bit buckets";
        rep.config = {{"modulus", 7}, {"degree", 2}, {"buckets", 2}, {"scheme", "low-bits"}};
        CollisionResult res =
            enum_collision({7, 2, 2, BucketScheme::LowBits, 0, 1, opt.threads}, budget);
        rep.add("collision probability equals (1 + (r-1)/p^2)/r", res.collision, Rat(50, 98),
                "==");
        CollisionResult one =
            enum_collision({7, 2, 1, BucketScheme::LowBits, 0, 1, opt.threads}, budget);
        rep.add("a single bucket always collides", one.collision, Rat::integer(1), "==");
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "four-wise hash collisions through the scaled-shift bucket map";
        rep.config = {{"modulus", 31}, {"degree", 4}, {"buckets", 4}, {"scheme", "mersenne-map"}};
        CollisionResult res =
            enum_collision({31, 4, 4, BucketScheme::MersenneMap, 0, 1, opt.threads}, budget);
        u128 q = 32;
        rep.add("collision probability within (q^2+r^2)/(r q^2)", res.collision,
                Rat(i128(q * q + 16), 4 * q * q), "<=");
        Rat worst;
        for (const Rat& marginal : res.index_distribution) {
            Rat dev = abs(marginal - Rat(1, 4));
            if (dev > worst) worst = dev;
        }
        rep.add("bucket marginals within 1/p of uniform", worst, Rat(1, 31), "<=");
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "top-bit bucketing: 2^b - 1 moduli against a non-mersenne contrast";
        rep.config = {{"moduli", {17, 31}}, {"degree", 2}, {"buckets", 2}, {"scheme", "top-bits"}};
        CollisionResult skew =
            enum_collision({17, 2, 2, BucketScheme::TopBits, 0, 1, opt.threads}, budget);
        rep.add("top bit of a mod-17 value is set with probability 1/17",
                skew.index_distribution[1], Rat(1, 17), "==");
        CollisionResult fair =
            enum_collision({31, 2, 2, BucketScheme::TopBits, 0, 1, opt.threads}, budget);
        rep.add("top bit of a mod-31 value is set with probability 15/31",
                fair.index_distribution[1], Rat(15, 31), "==");
        rep.add("mod-31 top-bit deviation from fair is at most 1/p",
                abs(fair.index_distribution[1] - Rat(1, 2)), Rat(1, 31), "<=");
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "shifted-splitter preimage counts";
        rep.config = {{"splitter", "mersenne"}};
        for (auto [b, r] : {std::pair<unsigned, u64>{6, 5}, {8, 12}, {10, 24}}) {
            SplitterDistribution s = enum_splitter_distribution(b, r, Splitter::MersenneArb);
            u64 half = u64(1) << (b - 1);
            u64 p = (u64(1) << b) - 1;
            u128 q = u128(1) << b;
            rep.add(with_params("zero bucket holds 2*ceil(2^(b-1)/r) - 1 preimages", b, r),
                    s.zero_bucket, Rat(i128(2 * ((half + r - 1) / r) - 1), p), "==");
            rep.add(with_params("zero-bucket probability within (q+r)/(r q)", b, r),
                    s.zero_bucket, Rat(i128(q + r), r * q), "<=");
            rep.add(with_params("pair collision within (q^2+r^2)/(r q^2)", b, r),
                    s.pair_collision, Rat(i128(q * q + u128(r) * r), r * q * q), "<=");
        }
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "scaled-shift collision identity over power-of-two domains";
        rep.config = {{"map", "pow2"}};
        for (auto [b, r] : {std::pair<unsigned, u64>{8, 6}, {10, 12}, {11, 5}}) {
            u64 q = u64(1) << b;
            std::vector<u64> counts(size_t(r), 0);
            for (u64 v = 0; v < q; ++v) ++counts[size_t(map_pow2(v, b, r))];
            u128 sq = 0;
            for (u64 cnt : counts) sq += u128(cnt) * cnt;
            u64 a = (r - q % r) % r;
            rep.add(with_params("sum of squared preimages times r equals q^2 + a(r-a)", b, r),
                    Rat::integer(i128(sq * r)),
                    Rat::integer(i128(u128(q) * q + u128(a) * (r - a))), "==");
        }
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "bucket-map uniformity scan";
        UniformityScan scan{12, 32};
        rep.config = {{"max_b", scan.max_b}, {"max_r", scan.max_r}};
        require_budget(mul_saturating(u128(1) << (scan.max_b + 1), scan.max_r * 5), budget);
        UniformityResult res = opt.threads > 1
                                   ? scan_map_uniformity_parallel(scan, opt.threads)
                                   : scan_map_uniformity_serial(scan);
        rep.add("maps keep preimage sizes within one of each other",
                Rat::integer(i128(res.violations)), Rat::integer(0), "==");
        rep.add("scan covered at least one combination", Rat::integer(1),
                Rat::integer(i128(res.combinations)), "<=");
        out.push_back(std::move(rep));
    }

    return out;
}

std::vector<EnumerationReport> run_moment_suite(const SuiteOptions& opt) {
    EnumBudget budget{opt.budget_seconds};
    std::vector<EnumerationReport> out;
    std::vector<std::pair<u128, i64>> stream{{1, 2}, {3, -1}, {7, 3}};

    out.push_back(enum_sketch_moments({5, 16, 4, Splitter::Pow2, stream, opt.threads}, budget));
    out.push_back(
        enum_sketch_moments({5, 16, 3, Splitter::MersenneArb, stream, opt.threads}, budget));
    out.push_back(
        enum_sketch_moments({5, 16, 4, Splitter::Pow2, {{5, 9}}, opt.threads}, budget));

    {
        EnumerationReport rep;
        rep.title = "sign near-cancellation identities";
        rep.config = {{"moduli", {7, 31}}};
        SignCancellation a = enum_sign_cancellation(3, 2, Splitter::Pow2);
        rep.add("p=7, r=2, low-bit splitter: E[s_x A] equals the anchored rate over p", a.lhs,
                a.rhs, "==");
        rep.add("p=7, r=2, low-bit splitter: E[s_x A] value", a.lhs, Rat(3, 49), "==");
        SignCancellation m = enum_sign_cancellation(3, 3, Splitter::MersenneArb);
        rep.add("p=7, r=3, shifted splitter: E[s_x A] equals the anchored rate over p", m.lhs,
                m.rhs, "==");
        rep.add("p=7, r=3, shifted splitter: E[s_x A] value", m.lhs, Rat(3, 49), "==");
        SignCancellation a31 = enum_sign_cancellation(5, 4, Splitter::Pow2);
        rep.add("p=31, r=4, low-bit splitter: E[s_x A] value", a31.lhs, Rat(7, 961), "==");
        rep.add("p=31, r=4, low-bit splitter: identity", a31.lhs, a31.rhs, "==");
        SignCancellation m31 = enum_sign_cancellation(5, 4, Splitter::MersenneArb);
        rep.add("p=31, r=4, shifted splitter: E[s_x A] value", m31.lhs, Rat(7, 961), "==");
        rep.add("p=31, r=4, shifted splitter: identity", m31.lhs, m31.rhs, "==");
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "parallel moment kernel agreement with the serial reference";
        int threads = std::max(2, opt.threads);
        rep.config = {{"modulus", 31}, {"buckets", 4}, {"threads", threads}};
        MomentSpec spec{5, 16, 4, Splitter::MersenneArb, stream, 1};
        require_budget(mul_saturating(pow_saturating(31, 4), stream.size() * 8), budget);
        MomentSums serial = enum_moment_sums_serial(spec);
        MomentSums parallel = enum_moment_sums_parallel(spec, threads);
        rep.add("sum of X agrees", Rat(i128(serial.sum_x), 1), Rat(i128(parallel.sum_x), 1),
                "==");
        rep.add("sum of X^2 agrees", Rat(i128(serial.sum_x_sq), 1),
                Rat(i128(parallel.sum_x_sq), 1), "==");
        out.push_back(std::move(rep));
    }

    return out;
}

std::vector<EnumerationReport> run_bits_suite(const SuiteOptions& opt) {
    (void)opt;
    std::vector<EnumerationReport> out;

    {
        EnumerationReport rep;
        rep.title = "bit distribution of values reduced by 2^b - 1";
        rep.config = {{"moduli", {3, 7, 31, 8191}}};
        for (u64 p : {u64(3), u64(7), u64(31), u64(8191)}) {
            unsigned b = unsigned(std::bit_width(p));
            Rat expected(i128((u64(1) << (b - 1)) - 1), p);
            std::vector<Rat> bias = enum_bit_bias(p);
            Rat spread;
            for (const Rat& bit : bias) {
                Rat dev = abs(bit - expected);
                if (dev > spread) spread = dev;
            }
            std::ostringstream name;
            name << "every bit is set with probability (2^(b-1)-1)/p (p=" << p << ")";
            rep.add(name.str(), spread, Rat::integer(0), "==");
            std::ostringstream dev_name;
            dev_name << "deviation from a fair bit is exactly 1/(2p) (p=" << p << ")";
            rep.add(dev_name.str(), abs(expected - Rat(1, 2)), Rat(1, 2 * u128(p)), "==");
            std::ostringstream cap_name;
            cap_name << "deviation from a fair bit is at most 1/p (p=" << p << ")";
            rep.add(cap_name.str(), abs(expected - Rat(1, 2)), Rat(1, p), "<=");
        }
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "non-mersenne contrast: top bit under a mod-17 reduction";
        rep.config = {{"modulus", 17}};
        std::vector<Rat> bias = enum_bit_bias(17);
        rep.add("top bit is set with probability 1/17", bias[4], Rat(1, 17), "==");
        rep.add("the 1/p deviation cap does not hold here", Rat(1, 17),
                abs(bias[4] - Rat(1, 2)), "<");
        out.push_back(std::move(rep));
    }

    return out;
}

std::vector<EnumerationReport> run_division_suite(const SuiteOptions& opt) {
    EnumBudget budget{opt.budget_seconds};
    std::vector<EnumerationReport> out;

    u64 trials = std::max(opt.trials, u64(opt.budget_seconds * (100000.0 / 60.0)));
    require_budget(u128(50'000'000) + u128(trials) * 25, budget);

    {
        FuzzReport fr = fuzz_division(trials, opt.seed);
        EnumerationReport rep;
        rep.title = "randomized division cross-check against arbitrary precision";
        rep.config = fr.to_json();
        rep.config["seed"] = opt.seed;
        rep.add("mismatches against the oracle", Rat::integer(i128(fr.failures)),
                Rat::integer(0), "==");
        rep.add("trials completed", Rat::integer(i128(fr.trials)), Rat::integer(i128(trials)),
                "==");
        out.push_back(std::move(rep));
    }

    {
        EnumerationReport rep;
        rep.title = "exhaustive small-width division sweep";
        rep.config = {{"max_b", 8}};
        u64 checked = 0, mismatches = 0;
        for (unsigned b = 2; b <= 8; ++b) {
            for (u128 c = 1; c < (u128(1) << (b - 1)); ++c) {
                PseudoMersenneModulus mod(b, c);
                u128 p = mod.p();
                u128 cap = (u128(1) << (2 * b)) - 1;
                if (UWide::of_u128(cap) > mod.max_input()) cap = mod.max_input().low_u128();
                for (u128 v = 0; v <= cap; ++v) {
                    UWide q = pseudo_mersenne_div(UWide::of_u128(v), mod);
                    UWide r = pseudo_mersenne_mod(UWide::of_u128(v), q, mod);
                    mismatches += q.low_u128() != v / p || r.low_u128() != v % p;
                    ++checked;
                }
            }
        }
        rep.add("exhaustive mismatches", Rat::integer(i128(mismatches)), Rat::integer(0), "==");
        rep.add("at least one million cases checked", Rat::integer(1000000),
                Rat::integer(i128(checked)), "<=");
        out.push_back(std::move(rep));
    }

    return out;
}

}  // namespace mersenne
