// Copyright 2026 The cdcim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Balanced (N+1)-digit encoding of signed N-bit integers.
//
// A word holds N+1 sign digits, each -1 or +1:
//
//   x = sum_{i=1}^{N-1} n_i * 2^(i-1) + (n0p + n0m) / 2
//
// Digits are stored by *column*, in the order the CiM bank lays them out:
// column 0 = n0p, column 1 = n0m, column i+1 = n_i. Column weights are
// therefore (1/2, 1/2, 1, 2, ..., 2^(N-2)).

#include "cdcim/common.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cdcim {

/// Selects one digit (column) of a BalancedWord.
class DigitIndex {
public:
  static constexpr DigitIndex half_plus() { return DigitIndex(0); }
  static constexpr DigitIndex half_minus() { return DigitIndex(1); }
  /// n_i for i >= 1.
  static DigitIndex bit(std::size_t i) {
    if (i == 0) throw IndexError("integer digit index starts at 1 (use half_plus/half_minus)");
    return DigitIndex(i + 1);
  }
  static constexpr DigitIndex column(std::size_t c) { return DigitIndex(c); }

  constexpr std::size_t column() const { return column_; }
  constexpr bool operator==(const DigitIndex&) const = default;

private:
  constexpr explicit DigitIndex(std::size_t c) : column_(c) {}
  std::size_t column_;
};

/// Twice the weight of a column, so that all weights are integers:
/// 1 for the half digits, 2^(c-1) for column c >= 2.
constexpr std::int64_t doubled_column_weight(std::size_t column) {
  return column < 2 ? 1 : (std::int64_t{1} << (column - 1));
}

class BalancedWord {
public:
  /// Builds a word from column-ordered digits; throws RangeError on any digit
  /// other than -1/+1.
  BalancedWord(std::size_t width, std::vector<std::int8_t> digits) : width_(width), digits_(std::move(digits)) {
    if (width_ < 2 || width_ > 62) throw RangeError("balanced word width must be in [2, 62]");
    if (digits_.size() != width_ + 1) {
      throw RangeError("balanced word of width " + std::to_string(width_) + " needs " +
                       std::to_string(width_ + 1) + " digits");
    }
    for (auto d : digits_) {
      if (d != 1 && d != -1) throw RangeError("balanced digits must be -1 or +1");
    }
  }

  std::size_t width() const { return width_; }
  std::size_t columns() const { return digits_.size(); }
  std::int8_t digit(DigitIndex k) const {
    if (k.column() >= digits_.size()) {
      throw IndexError("digit column " + std::to_string(k.column()) + " out of range for width " +
                       std::to_string(width_));
    }
    return digits_[k.column()];
  }
  std::span<const std::int8_t> digits() const { return digits_; }

  bool operator==(const BalancedWord&) const = default;

private:
  std::size_t width_;
  std::vector<std::int8_t> digits_;
};

inline std::int64_t max_balanced_value(std::size_t width) { return std::int64_t{1} << (width - 1); }

inline std::int64_t decode(const BalancedWord& w) {
  std::int64_t twice = 0;
  const auto d = w.digits();
  for (std::size_t c = 0; c < d.size(); ++c) twice += d[c] * doubled_column_weight(c);
  // The two half digits always pair up with an integer part of matching
  // parity, so `twice` is even.
  return twice / 2;
}

/// Deterministic encoding: odd x uses (n0p, n0m) = (+1, -1); even x uses both
/// half digits equal to sign(x), with +1 at zero.
inline BalancedWord encode(std::int64_t x, std::size_t width = 8) {
  if (width < 2 || width > 62) throw RangeError("balanced word width must be in [2, 62]");
  const std::int64_t limit = max_balanced_value(width);
  if (x < -limit || x > limit) {
    throw RangeError("value " + std::to_string(x) + " outside [" + std::to_string(-limit) + ", " +
                     std::to_string(limit) + "]");
  }
  std::vector<std::int8_t> digits(width + 1);
  std::int64_t c = 0;
  if ((x & 1) != 0) {
    digits[0] = 1;
    digits[1] = -1;
  } else {
    c = x >= 0 ? 1 : -1;
    digits[0] = digits[1] = static_cast<std::int8_t>(c);
  }
  // Positive integer digits must sum to (x - c + 2^(N-1) - 1) / 2.
  const std::uint64_t positive = static_cast<std::uint64_t>((x - c + limit - 1) / 2);
  for (std::size_t i = 1; i < width; ++i) digits[i + 1] = ((positive >> (i - 1)) & 1U) != 0 ? 1 : -1;
  return BalancedWord(width, std::move(digits));
}

/// Column k of every word in `words`.
inline std::vector<std::int8_t> bit_plane(std::span<const BalancedWord> words, DigitIndex k) {
  std::vector<std::int8_t> plane;
  plane.reserve(words.size());
  for (const auto& w : words) {
    if (w.width() != words.front().width()) throw RangeError("bit_plane needs words of a common width");
    plane.push_back(w.digit(k));
  }
  return plane;
}

inline std::vector<BalancedWord> encode_all(std::span<const std::int64_t> values, std::size_t width = 8) {
  std::vector<BalancedWord> out;
  out.reserve(values.size());
  for (auto v : values) out.push_back(encode(v, width));
  return out;
}

}  // namespace cdcim
