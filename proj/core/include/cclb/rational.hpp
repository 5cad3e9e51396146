#pragma once

#include <gmpxx.h>

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <string_view>

namespace cclb {

using Rational = mpq_class;

// The two arithmetic modes: 64-bit floating point and exact rationals.
template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

template <Scalar T>
inline constexpr bool is_exact_v = std::same_as<T, Rational>;

enum class Arithmetic { Float, Rational };

// Exact value of the shortest decimal that round-trips to `v`, so 0.1
// becomes 1/10 rather than the binary expansion of the double.
Rational to_rational(double v);

// Accepts integers, decimals with optional exponent, and "p/q" fractions.
Rational parse_rational(std::string_view text);

inline double to_double(const Rational& q) { return q.get_d(); }

// num / den in canonical form; mpq_class(num, den) alone does not reduce.
inline Rational ratio(long num, long den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// "p/q" (or "p" for integers).
std::string to_string(const Rational& q);

// Terminating decimal expansion of q when its denominator is 2^a 5^b.
std::optional<std::string> exact_decimal(const Rational& q);

template <Scalar T>
T scalar_from(double v) {
  if constexpr (is_exact_v<T>) return to_rational(v);
  else return v;
}

template <Scalar T>
T scalar_from(const Rational& q) {
  if constexpr (is_exact_v<T>) return q;
  else return q.get_d();
}

template <Scalar T>
double as_double(const T& v) {
  if constexpr (is_exact_v<T>) return v.get_d();
  else return v;
}

// 2^e, exact in both modes for the exponents we use.
template <Scalar T>
T pow2(long e) {
  if constexpr (is_exact_v<T>) {
    Rational out(1);
    if (e >= 0) mpz_mul_2exp(out.get_num_mpz_t(), out.get_num_mpz_t(), static_cast<unsigned long>(e));
    else mpz_mul_2exp(out.get_den_mpz_t(), out.get_den_mpz_t(), static_cast<unsigned long>(-e));
    out.canonicalize();
    return out;
  } else {
    return std::ldexp(1.0, static_cast<int>(e));
  }
}

template <Scalar T>
T min_of(const T& a, const T& b) {
  return b < a ? b : a;
}

template <Scalar T>
T max_of(const T& a, const T& b) {
  return a < b ? b : a;
}

template <Scalar T>
T abs_of(const T& a) {
  if constexpr (is_exact_v<T>) return abs(a);
  else return std::fabs(a);
}

// Signed comparisons against zero with a float-mode threshold; exact in
// rational mode.
template <Scalar T>
bool is_positive(const T& v, double tol) {
  if constexpr (is_exact_v<T>) return sgn(v) > 0;
  else return v > tol;
}

template <Scalar T>
bool is_negative(const T& v, double tol) {
  if constexpr (is_exact_v<T>) return sgn(v) < 0;
  else return v < -tol;
}

template <Scalar T>
bool is_zero(const T& v, double tol) {
  return !is_positive(v, tol) && !is_negative(v, tol);
}

}  // namespace cclb
