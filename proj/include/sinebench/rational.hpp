#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace sinebench {

using BigInt = boost::multiprecision::cpp_int;

namespace detail {

template <typename Int>
Int abs_value(const Int& v) {
    return v < 0 ? Int(-v) : v;
}

template <typename Int>
Int gcd_value(Int a, Int b) {
    a = abs_value(a);
    b = abs_value(b);
    while (b != 0) {
        Int r = a % b;
        a = b;
        b = r;
    }
    return a;
}

template <typename Int>
Int lcm_value(const Int& a, const Int& b) {
    if (a == 0 || b == 0) {
        return Int(0);
    }
    return abs_value(a / gcd_value(a, b) * b);
}

template <typename Int>
double to_double(const Int& v) {
    if constexpr (std::is_integral_v<Int>) {
        return static_cast<double>(v);
    } else {
        return v.template convert_to<double>();
    }
}

}  // namespace detail

/// Exact fraction, always stored in lowest terms with a positive denominator.
template <typename Int>
class BasicRational {
public:
    BasicRational() = default;

    /// Throws std::domain_error on a zero denominator.
    BasicRational(Int numerator, Int denominator) {
        if (denominator == 0) {
            throw std::domain_error("rational: zero denominator");
        }
        if (denominator < 0) {
            numerator = -numerator;
            denominator = -denominator;
        }
        Int g = detail::gcd_value(numerator, denominator);
        if (g == 0) {
            g = 1;
        }
        num_ = numerator / g;
        den_ = denominator / g;
    }

    explicit BasicRational(Int whole) : num_(std::move(whole)), den_(1) {}

    const Int& numerator() const noexcept { return num_; }
    const Int& denominator() const noexcept { return den_; }

    double to_double() const { return detail::to_double(num_) / detail::to_double(den_); }

    BasicRational reciprocal() const { return BasicRational(den_, num_); }

    friend BasicRational operator*(const BasicRational& a, const BasicRational& b) {
        return BasicRational(a.num_ * b.num_, a.den_ * b.den_);
    }

    friend BasicRational operator/(const BasicRational& a, const BasicRational& b) {
        return BasicRational(a.num_ * b.den_, a.den_ * b.num_);
    }

    friend bool operator==(const BasicRational& a, const BasicRational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    friend bool operator<(const BasicRational& a, const BasicRational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }

    std::string str() const {
        if constexpr (std::is_integral_v<Int>) {
            return std::to_string(num_) + "/" + std::to_string(den_);
        } else {
            return num_.str() + "/" + den_.str();
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const BasicRational& r) { return os << r.str(); }

private:
    Int num_{0};
    Int den_{1};
};

/// Frequencies: small numerators and denominators.
using Rational = BasicRational<std::int64_t>;

/// Periods: lcm of many denominators needs unbounded width.
using BigRational = BasicRational<BigInt>;

inline Rational reduce(std::int64_t numerator, std::int64_t denominator) {
    return Rational(numerator, denominator);
}

inline BigRational widen(const Rational& r) {
    return BigRational(BigInt(r.numerator()), BigInt(r.denominator()));
}

}  // namespace sinebench
