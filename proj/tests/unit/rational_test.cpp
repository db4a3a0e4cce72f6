// SPDX-License-Identifier: Apache-2.0
/*
Copyright (C) 2026 The Penny Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#include <gtest/gtest.h>

#include "penny/error.hpp"
#include "penny/rational.hpp"

namespace penny {
namespace {

TEST(RationalTest, ParsesDecimalsExponentsAndFractions) {
  EXPECT_EQ(Rational::parse("12"), Rational(12));
  EXPECT_EQ(Rational::parse("-0.25"), Rational(-1, 4));
  EXPECT_EQ(Rational::parse("5e7"), Rational(50000000));
  EXPECT_EQ(Rational::parse("1.5E-3"), Rational(3, 2000));
  EXPECT_EQ(Rational::parse("6/8"), Rational(3, 4));
  EXPECT_FALSE(Rational::try_parse("abc"));
  EXPECT_FALSE(Rational::try_parse("1/0"));
  EXPECT_FALSE(Rational::try_parse(""));
}

TEST(RationalTest, KeepsLowestTermsAndPositiveDenominator) {
  Rational r(4, -6);
  EXPECT_EQ(r.num(), -2);
  EXPECT_EQ(r.den(), 3);
  EXPECT_EQ(r.str(), "-2/3");
}

TEST(RationalTest, FromDoubleUsesShortestDecimal) {
  EXPECT_EQ(Rational::from_double(0.1), Rational(1, 10));
  EXPECT_EQ(Rational::from_double(16.6667), Rational(166667, 10000));
  EXPECT_EQ(Rational::from_double(5e7), Rational(50000000));
}

TEST(RationalTest, RoundsHalfToEven) {
  EXPECT_EQ(Rational(1, 2).round_half_even(), 0);
  EXPECT_EQ(Rational(3, 2).round_half_even(), 2);
  EXPECT_EQ(Rational(5, 2).round_half_even(), 2);
  EXPECT_EQ(Rational(-5, 2).round_half_even(), -2);
  EXPECT_EQ(Rational(-7, 2).round_half_even(), -4);
  EXPECT_EQ(Rational(7, 3).round_half_even(), 2);
  EXPECT_EQ(Rational(8, 3).round_half_even(), 3);
}

TEST(RationalTest, FloorAndCeil) {
  EXPECT_EQ(Rational(7, 2).floor(), 3);
  EXPECT_EQ(Rational(7, 2).ceil(), 4);
  EXPECT_EQ(Rational(-7, 2).floor(), -4);
  EXPECT_EQ(Rational(-7, 2).ceil(), -3);
  EXPECT_EQ(Rational(4).ceil(), 4);
}

TEST(RationalTest, DecimalTextOnlyWhenTerminating) {
  EXPECT_EQ(Rational(1, 4).decimal().value(), "0.25");
  EXPECT_EQ(Rational(-3, 8).decimal().value(), "-0.375");
  EXPECT_EQ(Rational(5000).decimal().value(), "5000");
  EXPECT_FALSE(Rational(1, 3).decimal());
  EXPECT_EQ(Rational(1, 3).fixed(4), "0.3333");
  EXPECT_EQ(Rational(5, 2).fixed(0), "2");
}

TEST(RationalTest, ArithmeticIsExact) {
  Rational a(1, 3), b(1, 6);
  EXPECT_EQ(a + b, Rational(1, 2));
  EXPECT_EQ(a - b, Rational(1, 6));
  EXPECT_EQ(a * b, Rational(1, 18));
  EXPECT_EQ(a / b, Rational(2));
  EXPECT_LT(b, a);
  EXPECT_EQ(min(a, b), b);
}

TEST(RationalTest, OverflowThrowsInsteadOfWrapping) {
  Rational big(INT64_MAX / 2);
  try {
    (void)(big * Rational(4));
    FAIL() << "expected Overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Overflow);
  }
  EXPECT_THROW((void)(Rational(1) / Rational(0)), Error);
}

TEST(MoneyTest, FormatsMicroUsd) {
  EXPECT_EQ(format_usd(115000000), "$115.000000");
  EXPECT_EQ(format_usd(1036800), "$1.036800");
  EXPECT_EQ(format_usd(0), "$0.000000");
  EXPECT_EQ(format_usd(-1), "-$0.000001");
}

}  // namespace
}  // namespace penny
