#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace bf {

using json = nlohmann::json;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// highest derivative order any construction or check will request
inline constexpr int kMaxOrder = 60;

struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed/ill-typed input (CLI exit 1).
struct validation_error : error {
  using error::error;
};
// Raised when a construction cannot be completed (CLI exit 2).
struct construction_error : error {
  using error::error;
};
// Raised when a built object fails its own verification (CLI exit 3).
struct verification_error : error {
  using error::error;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational rat_of_double(double v) {
  if (!std::isfinite(v)) throw validation_error("non-finite value has no rational form");
  // every finite double is an exact dyadic rational
  int exp = 0;
  double m = std::frexp(v, &exp);
  BigInt num = BigInt(static_cast<long long>(std::ldexp(m, 53)));
  exp -= 53;
  Rational r(num, 1);
  if (exp >= 0)
    r *= Rational(BigInt(1) << exp, 1);
  else
    r /= Rational(BigInt(1) << (-exp), 1);
  return r;
}

// Rationals travel as {"num": "...", "den": "..."} with decimal strings, or as
// plain integers for convenience on input. Output is always the string form.
inline json rat_to_json(const Rational& r) {
  return json{{"num", numerator(r).str()}, {"den", denominator(r).str()}};
}

inline Rational rat_from_json(const json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(BigInt(j.get<std::int64_t>()), 1);
    if (j.is_string()) return Rational(BigInt(j.get<std::string>()), 1);
    if (j.is_object()) {
      BigInt num(j.at("num").get<std::string>());
      BigInt den(j.at("den").get<std::string>());
      if (den == 0) throw validation_error(where + ": zero denominator");
      return Rational(num, den);
    }
  } catch (const validation_error&) {
    throw;
  } catch (const std::exception& e) {
    throw validation_error(where + ": bad rational (" + e.what() + ")");
  }
  throw validation_error(where + ": expected rational as integer, string or {num,den}");
}

// Round a positive value up to 3 significant digits (certificate headroom).
inline double round_up_3(double v) {
  if (v <= 0.0 || !std::isfinite(v)) return v;
  double e = std::floor(std::log10(v));
  double scale = std::pow(10.0, e - 2);
  return std::ceil(v / scale * (1.0 + 1e-12)) * scale;
}

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// log of binomial / factorial / Pochhammer (k)_i, for overflow-safe bounds
inline double lbinom(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}
inline double lfact(int n) { return std::lgamma(n + 1.0); }
inline double lpoch(int k, int i) {  // log of k*(k-1)*...*(k-i+1)
  if (i == 0) return 0.0;
  if (i > k) return -std::numeric_limits<double>::infinity();
  return std::lgamma(k + 1.0) - std::lgamma(k - i + 1.0);
}

}  // namespace bf
