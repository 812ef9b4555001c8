// rational.hpp -- exact scalar type and the dual float/exact arithmetic policy.
//
// The whole core is templated on a scalar S that is either double (default
// solve mode, tolerance-based comparisons) or Rational (exact mode).
// ScalarOps<S> centralises the few places where the two differ.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "causalot/error.hpp"

namespace causalot {

using Rational = boost::multiprecision::cpp_rational;

// Parses "0.53", "-1.2e-3", "3" or "p/q" into an exact rational.
inline Rational parse_rational(const std::string& text) {
  std::string s = text;
  if (s.empty()) fail(ErrorCode::ParseError, "empty numeric literal");
  // strips a sign and leading zeros; cpp_int reads "0..." as an octal prefix
  auto clean_int = [&](std::string d) -> boost::multiprecision::cpp_int {
    bool minus = !d.empty() && d[0] == '-';
    if (!d.empty() && (d[0] == '-' || d[0] == '+')) d.erase(d.begin());
    if (d.empty()) fail(ErrorCode::ParseError, "bad numeric literal '" + text + "'");
    d.erase(0, std::min(d.find_first_not_of('0'), d.size() - 1));
    boost::multiprecision::cpp_int v(d);
    return minus ? boost::multiprecision::cpp_int(-v) : v;
  };
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    try {
      boost::multiprecision::cpp_int num = clean_int(s.substr(0, slash));
      boost::multiprecision::cpp_int den = clean_int(s.substr(slash + 1));
      if (den == 0) fail(ErrorCode::ParseError, "zero denominator in '" + text + "'");
      return Rational(num, den);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "bad fraction literal '" + text + "'");
    }
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_dot = false, seen_digit = false;
  long exponent = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) fail(ErrorCode::ParseError, "bad numeric literal '" + text + "'");
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      long e = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + s.size(), e);
      if (ec != std::errc() || p != s.data() + s.size())
        fail(ErrorCode::ParseError, "bad exponent in '" + text + "'");
      exponent = e;
      break;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) ++frac_digits;
    } else {
      fail(ErrorCode::ParseError, "bad numeric literal '" + text + "'");
    }
  }
  if (!seen_digit) fail(ErrorCode::ParseError, "bad numeric literal '" + text + "'");
  boost::multiprecision::cpp_int num = clean_int(digits);
  boost::multiprecision::cpp_int den = 1;
  long shift = exponent - frac_digits;
  for (long k = 0; k < shift; ++k) num *= 10;
  for (long k = 0; k < -shift; ++k) den *= 10;
  Rational r(num, den);
  return neg ? Rational(-r) : r;
}

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }
inline double to_double(double x) { return x; }

inline std::string rational_string(const Rational& r) {
  return r.str();
}

// ---------------------------------------------------------------------------

template <class S>
struct ScalarOps;

template <>
struct ScalarOps<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& r) { return to_double(r); }
  static double from_double(double x) { return x; }
  static double abs(double x) { return std::abs(x); }
  static double to_dbl(double x) { return x; }
  static std::string repr(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
  // zero test against the mode tolerance
  static bool is_zero(double x, double tol) { return std::abs(x) <= tol; }
  static bool equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }
};

template <>
struct ScalarOps<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& r) { return r; }
  static Rational from_double(double x) { return Rational(x); }
  static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
  static double to_dbl(const Rational& x) { return to_double(x); }
  static std::string repr(const Rational& x) { return x.str(); }
  static bool is_zero(const Rational& x, double) { return x == 0; }
  static bool equal(const Rational& a, const Rational& b, double) { return a == b; }
};

// integer power, enough for cost exponents
template <class S>
inline S pow_int(const S& base, int p) {
  S r = S(1);
  for (int i = 0; i < p; ++i) r = r * base;
  return r;
}

}  // namespace causalot
