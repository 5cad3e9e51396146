#include <gtest/gtest.h>

#include "cclb/error.hpp"
#include "cclb/rational.hpp"

using cclb::Rational;

TEST(Rational, ParsesIntegersDecimalsAndFractions) {
  EXPECT_EQ(cclb::parse_rational("3"), Rational(3));
  EXPECT_EQ(cclb::parse_rational("0.25"), cclb::ratio(1, 4));
  EXPECT_EQ(cclb::parse_rational("-1.5e-1"), cclb::ratio(-3, 20));
  EXPECT_EQ(cclb::parse_rational("6/8"), cclb::ratio(3, 4));
  EXPECT_EQ(cclb::parse_rational("2.5E2"), Rational(250));
}

TEST(Rational, RejectsMalformedText) {
  for (const char* bad : {"", "abc", "1/0", "1.2.3", "1/", "--1"}) {
    EXPECT_THROW(cclb::parse_rational(bad), cclb::Error) << bad;
  }
}

TEST(Rational, ShortestDecimalConversion) {
  EXPECT_EQ(cclb::to_rational(0.1), cclb::ratio(1, 10));
  EXPECT_EQ(cclb::to_rational(0.9), cclb::ratio(9, 10));
  EXPECT_EQ(cclb::to_rational(-2.0), Rational(-2));
  EXPECT_THROW(cclb::to_rational(std::nan("")), cclb::Error);
}

TEST(Rational, RatioIsCanonical) {
  const Rational q = cclb::ratio(4, 8);
  EXPECT_EQ(q.get_num(), 1);
  EXPECT_EQ(q.get_den(), 2);
  EXPECT_EQ(q, Rational(1, 2));
}

TEST(Rational, ExactDecimal) {
  EXPECT_EQ(cclb::exact_decimal(cclb::ratio(1, 4)).value(), "0.25");
  EXPECT_EQ(cclb::exact_decimal(cclb::ratio(-3, 40)).value(), "-0.075");
  EXPECT_EQ(cclb::exact_decimal(Rational(7)).value(), "7");
  EXPECT_FALSE(cclb::exact_decimal(cclb::ratio(1, 3)).has_value());
}

TEST(Rational, PowersOfTwo) {
  EXPECT_EQ(cclb::pow2<Rational>(-3), cclb::ratio(1, 8));
  EXPECT_EQ(cclb::pow2<Rational>(10), Rational(1024));
  EXPECT_DOUBLE_EQ(cclb::pow2<double>(-19), std::ldexp(1.0, -19));
}

TEST(Rational, ToleranceHelpers) {
  EXPECT_TRUE(cclb::is_zero(1e-13, 1e-12));
  EXPECT_FALSE(cclb::is_zero(Rational(1, 1000000000), 1e-3));
  EXPECT_TRUE(cclb::is_positive(Rational(1, 1000000000), 1e-3));
  EXPECT_FALSE(cclb::is_positive(1e-13, 1e-12));
}
