#include "cclb/rational.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <algorithm>
#include <optional>

#include "cclb/error.hpp"

namespace cclb {

namespace {

Rational parse_decimal(std::string_view text, std::string_view original) {
  auto bad = [&]() { fail(ErrorKind::Input, "not a number: '" + std::string(original) + "'"); };
  if (text.empty()) bad();
  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  const auto epos = text.find_first_of("eE");
  if (epos != std::string_view::npos) {
    auto exp_text = text.substr(epos + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc{} || ptr != exp_text.data() + exp_text.size()) bad();
    text = text.substr(0, epos);
  }
  std::string digits;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_point) bad();
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --exponent;
    } else {
      bad();
    }
  }
  if (!seen_digit) bad();
  mpz_class num(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  Rational out = exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

}  // namespace

Rational to_rational(double v) {
  require(std::isfinite(v), ErrorKind::Parameter, "cannot convert a non-finite value to a rational");
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  const std::string_view text(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
  return parse_decimal(text, text);
}

Rational parse_rational(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text, text);
  const Rational num = parse_decimal(text.substr(0, slash), text);
  const Rational den = parse_decimal(text.substr(slash + 1), text);
  require(sgn(den) != 0, ErrorKind::Input, "zero denominator in '" + std::string(text) + "'");
  return num / den;
}

std::string to_string(const Rational& q) { return q.get_str(); }

// Terminating decimal expansion of q when its denominator is 2^a 5^b.
std::optional<std::string> exact_decimal(const Rational& q) {
  mpz_class den = q.get_den();
  int twos = 0;
  int fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
  if (den != 1) return std::nullopt;
  const int places = std::max(twos, fives);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(places));
  const mpz_class scaled = q.get_num() * scale / q.get_den();
  std::string digits = scaled.get_str();
  const bool negative = !digits.empty() && digits.front() == '-';
  if (negative) digits.erase(0, 1);
  if (places == 0) return (negative ? "-" : "") + digits;
  if (static_cast<int>(digits.size()) <= places) digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
  digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  return (negative ? "-" : "") + digits;
}

}  // namespace cclb
