#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <string>

// Boost 1.74's mixed rational/integer operator== recurses forever under C++20's
// reversed-operand rewriting. These exact-match overloads win resolution.
namespace boost {
inline bool operator==(const rational<std::int64_t> &a, std::int64_t b) {
  return a.denominator() == 1 && a.numerator() == b;
}
inline bool operator==(const rational<std::int64_t> &a, int b) { return a == static_cast<std::int64_t>(b); }
} // namespace boost

namespace stg {

/// Exact cycles-per-token arithmetic. Every rate in the library is one of these.
using Rational = boost::rational<std::int64_t>;

/// Smallest integer >= value.
std::int64_t ceil(const Rational &value);

/// Largest integer <= value.
std::int64_t floor(const Rational &value);

/// Decimal rendering with exactly six fractional digits, rounded half away from zero.
std::string format_fixed6(const Rational &value);

/// Parses "12", "3/4" or "2.5" into an exact rational. Throws std::invalid_argument.
Rational parse_rational(const std::string &text);

inline std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  return (num + den - 1) / den;
}

} // namespace stg
