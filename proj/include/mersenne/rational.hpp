#pragma once

#include <compare>
#include <string>

#include "mersenne/uwide.hpp"

namespace mersenne {

std::string to_decimal(u128 v);
std::string to_decimal(i128 v);

// Exact rational with a signed 128-bit numerator and positive denominator,
// kept reduced.  Comparisons cross-multiply at 256 bits, so they never
// overflow and never round.
class Rat {
public:
    constexpr Rat() = default;
    Rat(i128 numerator, u128 denominator);
    static Rat integer(i128 n) {
        Rat r;
        r.num_ = n;
        return r;
    }

    i128 num() const { return num_; }
    u128 den() const { return den_; }
    bool is_zero() const { return num_ == 0; }
    bool negative() const { return num_ < 0; }

    Rat operator+(const Rat& o) const;
    Rat operator-(const Rat& o) const;
    Rat operator*(const Rat& o) const;

    friend Rat abs(const Rat& r) { return r.num_ < 0 ? Rat(-r.num_, r.den_) : r; }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rat& a, const Rat& b);

    std::string str() const;  // "num/den", or just "num" when den == 1

private:
    i128 num_ = 0;
    u128 den_ = 1;
};

}  // namespace mersenne
