#pragma once

#include <gmpxx.h>

#include <cmath>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace hlab {

using Rational = mpq_class;

/// Parses "p/q", "p" or "-p/q". Throws ParseError (line 0) on malformed input or q = 0.
inline Rational parse_rational(std::string_view text, int line = 0) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  auto is_integer = [](std::string_view s) {
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  auto slash = text.find('/');
  std::string_view num = text.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : text.substr(slash + 1);
  if (!is_integer(num) || !is_integer(den) || den.front() == '-' || den.front() == '+')
    throw ParseError(line, "malformed rational '" + std::string(text) + "'");
  if (num.front() == '+') num.remove_prefix(1);
  mpz_class p(std::string(num), 10);
  mpz_class q(std::string(den), 10);
  if (q == 0) throw ParseError(line, "zero denominator in '" + std::string(text) + "'");
  Rational r(p, q);
  r.canonicalize();
  return r;
}

/// Canonical text: "p/q" in lowest terms, "p" when q = 1.
inline std::string to_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

/// x^a with the convention 0^a = 0 for a in (0, 1].
inline double power(double x, double a) {
  if (x == 0.0) return 0.0;
  return std::pow(x, a);
}

}  // namespace hlab
