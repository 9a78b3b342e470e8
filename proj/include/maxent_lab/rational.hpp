#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "maxent_lab/error.hpp"

namespace maxent_lab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Exact binary expansion of a finite double.
inline Rational exact_from_double(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::invalid_input, "non-finite value");
  int exponent = 0;
  double mantissa = std::frexp(x, &exponent);
  // mantissa * 2^53 is an exact integer
  auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational r{BigInt(scaled)};
  if (exponent > 0) {
    r *= Rational(BigInt(1) << exponent);
  } else if (exponent < 0) {
    r /= Rational(BigInt(1) << -exponent);
  }
  return r;
}

inline std::string to_string(const Rational& r) {
  if (boost::multiprecision::denominator(r) == 1) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

inline std::int64_t to_int64(const BigInt& v, std::string_view what) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::lattice_blowup, std::string(what) + " does not fit in 64 bits");
  return v.convert_to<std::int64_t>();
}

namespace detail {

inline BigInt parse_digits(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw Error(ErrorCode::invalid_input, "malformed number '" + std::string(whole) + "'");
  BigInt v = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error(ErrorCode::invalid_input, "malformed number '" + std::string(whole) + "'");
    v = v * 10 + (c - '0');
  }
  return v;
}

inline BigInt pow10(std::int64_t e) {
  BigInt r = 1;
  for (std::int64_t i = 0; i < e; ++i) r *= 10;
  return r;
}

inline Rational parse_decimal(std::string_view text, std::string_view whole) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  std::int64_t exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (exp_text.size() > 6) throw Error(ErrorCode::invalid_input, "exponent too large in '" + std::string(whole) + "'");
    exponent = parse_digits(exp_text, whole).convert_to<std::int64_t>();
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }
  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (int_part.empty() && frac_part.empty())
      throw Error(ErrorCode::invalid_input, "malformed number '" + std::string(whole) + "'");
    digits = std::string(int_part) + std::string(frac_part);
    exponent -= static_cast<std::int64_t>(frac_part.size());
  } else {
    digits = std::string(text);
  }
  Rational value{parse_digits(digits, whole)};
  if (exponent > 0) value *= Rational(pow10(exponent));
  if (exponent < 0) value /= Rational(pow10(-exponent));
  return negative ? Rational(-value) : value;
}

}  // namespace detail

/// Parses "p/q", integers, and decimals (with optional exponent) exactly.
inline Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  std::string_view whole = text;
  if (text.empty()) throw Error(ErrorCode::invalid_input, "empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = detail::parse_decimal(text.substr(0, slash), whole);
    std::string_view den_text = text.substr(slash + 1);
    Rational den{detail::parse_digits(den_text, whole)};
    if (den == 0) throw Error(ErrorCode::invalid_input, "zero denominator in '" + std::string(whole) + "'");
    return num / den;
  }
  return detail::parse_decimal(text, whole);
}

inline BigInt gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  BigInt g = gcd(a, b);
  BigInt r = a / g * b;
  return r < 0 ? BigInt(-r) : r;
}

}  // namespace maxent_lab
