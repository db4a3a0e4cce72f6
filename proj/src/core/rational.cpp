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
#include "penny/rational.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "penny/error.hpp"

namespace penny {
namespace {

using i128 = __int128;

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();
constexpr i128 kMin = std::numeric_limits<std::int64_t>::min();

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

[[noreturn]] void overflow() { throw Error(ErrorCode::Overflow, "rational arithmetic overflow"); }

bool checked_add(std::int64_t a, std::int64_t b, std::int64_t& out) {
  return !__builtin_add_overflow(a, b, &out);
}

// floor division for i128 with positive divisor
i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  *this = from_wide(num, den);
}

Rational Rational::from_wide(i128 num, i128 den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > kMax || num < kMin || den > kMax) overflow();
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

std::optional<Rational> Rational::try_parse(std::string_view text) {
  try {
    return parse(text);
  } catch (const Error&) {
    return std::nullopt;
  }
}

Rational Rational::parse(std::string_view text) {
  auto bad = [&]() -> Error {
    return Error(ErrorCode::InvalidArgument, "not a number: '" + std::string(text) + "'");
  };
  if (text.empty()) throw bad();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t n = 0;
    std::int64_t d = 0;
    auto lhs = text.substr(0, slash);
    auto rhs = text.substr(slash + 1);
    auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), n);
    auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), d);
    if (r1.ec != std::errc() || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc() ||
        r2.ptr != rhs.data() + rhs.size() || d == 0)
      throw bad();
    return Rational(n, d);
  }

  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '-' || text[i] == '+') {
    negative = text[i] == '-';
    ++i;
  }
  i128 mantissa = 0;
  int scale = 0;  // value = mantissa * 10^scale
  bool any_digit = false;
  bool seen_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      any_digit = true;
      mantissa = mantissa * 10 + (c - '0');
      if (mantissa > kMax * 10) overflow();
      if (seen_dot) --scale;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c == '_') {
      continue;
    } else {
      break;
    }
  }
  if (!any_digit) throw bad();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw bad();
    ++i;
    int exp = 0;
    auto rest = text.substr(i);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto res = std::from_chars(rest.data(), rest.data() + rest.size(), exp);
    if (res.ec != std::errc() || res.ptr != rest.data() + rest.size()) throw bad();
    scale += exp;
  }
  if (scale > 30 || scale < -30) overflow();
  i128 num = negative ? -mantissa : mantissa;
  i128 den = 1;
  for (; scale > 0; --scale) {
    num *= 10;
    if (abs128(num) > kMax * 10) overflow();
  }
  for (; scale < 0; ++scale) {
    den *= 10;
    if (den > kMax * 10) {
      // Reduce early so long decimals still fit.
      i128 g = gcd128(num, den);
      num /= g;
      den /= g;
      if (den > kMax * 10) overflow();
    }
  }
  return from_wide(num, den);
}

Rational Rational::from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "non-finite number");
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return parse(std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data())));
}

std::int64_t Rational::floor() const {
  return static_cast<std::int64_t>(floor_div(num_, den_));
}

std::int64_t Rational::ceil() const {
  return static_cast<std::int64_t>(-floor_div(-static_cast<i128>(num_), den_));
}

std::int64_t Rational::round_half_even() const {
  i128 q = floor_div(num_, den_);
  i128 rem2 = (static_cast<i128>(num_) - q * den_) * 2;  // in [0, 2*den)
  if (rem2 > den_ || (rem2 == den_ && (q % 2 != 0))) ++q;
  if (q > kMax || q < kMin) overflow();
  return static_cast<std::int64_t>(q);
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<std::string> Rational::decimal() const {
  std::int64_t d = den_;
  int twos = 0;
  int fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return std::nullopt;
  int digits = std::max(twos, fives);
  std::string s = fixed(digits);
  return s;
}

std::string Rational::fixed(int digits) const {
  i128 scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  i128 n = static_cast<i128>(num_) * scale;
  // round half even of n / den
  i128 q = floor_div(n, den_);
  i128 rem2 = (n - q * den_) * 2;
  if (rem2 > den_ || (rem2 == den_ && (q % 2 != 0))) ++q;
  bool negative = q < 0;
  i128 mag = abs128(q);
  i128 whole = mag / scale;
  i128 frac = mag % scale;
  auto to_str = [](i128 v) {
    if (v == 0) return std::string("0");
    std::string out;
    while (v > 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return out;
  };
  std::string out = negative ? "-" : "";
  out += to_str(whole);
  if (digits > 0) {
    std::string f = to_str(frac);
    out += '.';
    out += std::string(static_cast<std::size_t>(digits) - f.size(), '0');
    out += f;
  }
  return out;
}

Rational Rational::operator-() const {
  if (num_ == std::numeric_limits<std::int64_t>::min()) overflow();
  Rational r = *this;
  r.num_ = -num_;
  return r;
}

Rational& Rational::operator+=(const Rational& rhs) {
  if (den_ == 1 && rhs.den_ == 1) {
    if (!checked_add(num_, rhs.num_, num_)) overflow();
    return *this;
  }
  *this = from_wide(static_cast<i128>(num_) * rhs.den_ + static_cast<i128>(rhs.num_) * den_,
                    static_cast<i128>(den_) * rhs.den_);
  return *this;
}

Rational& Rational::operator-=(const Rational& rhs) { return *this += -rhs; }

Rational& Rational::operator*=(const Rational& rhs) {
  if (den_ == 1 && rhs.den_ == 1) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(num_, rhs.num_, &out)) overflow();
    num_ = out;
    return *this;
  }
  *this = from_wide(static_cast<i128>(num_) * rhs.num_, static_cast<i128>(den_) * rhs.den_);
  return *this;
}

Rational& Rational::operator/=(const Rational& rhs) {
  if (rhs.num_ == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  *this = from_wide(static_cast<i128>(num_) * rhs.den_, static_cast<i128>(den_) * rhs.num_);
  return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  if (a.den_ == b.den_) return a.num_ <=> b.num_;
  i128 lhs = static_cast<i128>(a.num_) * b.den_;
  i128 rhs = static_cast<i128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string format_usd(MicroUsd amount) {
  Rational usd(amount, 1'000'000);
  std::string s = usd.fixed(6);
  if (!s.empty() && s.front() == '-') return "-$" + s.substr(1);
  return "$" + s;
}

}  // namespace penny
