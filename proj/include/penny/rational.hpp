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
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace penny {

// Exact rational with a 64-bit numerator and a positive 64-bit denominator,
// always kept in lowest terms. Arithmetic throws Error(Overflow) rather than
// wrapping.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den);

  // Accepts "12", "-0.25", "5e7", "1.5E-3" and "3/4".
  static Rational parse(std::string_view text);
  static std::optional<Rational> try_parse(std::string_view text);
  // Exact value of the shortest decimal that round-trips to `value`.
  static Rational from_double(double value);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_integer() const { return den_ == 1; }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  std::int64_t floor() const;
  std::int64_t ceil() const;
  std::int64_t round_half_even() const;
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // "7" or "3/4".
  std::string str() const;
  // Exact decimal text when the expansion terminates, e.g. "0.25".
  std::optional<std::string> decimal() const;
  // Rounded half-even to `digits` fractional digits.
  std::string fixed(int digits) const;

  Rational operator-() const;
  Rational& operator+=(const Rational& rhs);
  Rational& operator-=(const Rational& rhs);
  Rational& operator*=(const Rational& rhs);
  Rational& operator/=(const Rational& rhs);

  friend Rational operator+(Rational lhs, const Rational& rhs) { return lhs += rhs; }
  friend Rational operator-(Rational lhs, const Rational& rhs) { return lhs -= rhs; }
  friend Rational operator*(Rational lhs, const Rational& rhs) { return lhs *= rhs; }
  friend Rational operator/(Rational lhs, const Rational& rhs) { return lhs /= rhs; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  static Rational from_wide(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline const Rational& min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// Money is integer micro-USD throughout.
using MicroUsd = std::int64_t;

// "$115.000000"; negative amounts render as "-$0.000001".
std::string format_usd(MicroUsd amount);

}  // namespace penny
