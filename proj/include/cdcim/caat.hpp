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

// Three-phase analog MAC through the two-level adder tree.
//
//   P1 (S1 on)  in-column: each of the 9x9 columns averages its +-1 products
//               over all R_total rows onto an equal source-line load.
//   P2 (S2 on)  in-bank:   each leaf network merges its 9 source lines with
//               the weight-bit coefficients.
//   P3 (S3 on)  in-array:  the root network merges the 9 leaf outputs with the
//               activation-bit coefficients.
//
// With ideal networks the result is dot(A, W) / (R_total * 128^2).

#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"
#include "cdcim/numeric.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cdcim {

struct SwitchState {
  bool s1 = false;
  bool s2 = false;
  bool s3 = false;
  bool operator==(const SwitchState&) const = default;
};

struct PhaseSchedule {
  static constexpr std::array<Phase, 3> order{Phase::p1, Phase::p2, Phase::p3};

  static constexpr SwitchState switches(Phase p) {
    return SwitchState{is_closed(SwitchGroup::s1, p), is_closed(SwitchGroup::s2, p), is_closed(SwitchGroup::s3, p)};
  }

  static constexpr const char* name(Phase p) {
    switch (p) {
      case Phase::p1: return "in-column";
      case Phase::p2: return "in-bank";
      case Phase::p3: return "in-array";
    }
    return "?";
  }
};

template <AnalogScalar Scalar>
struct BankState {
  std::vector<Scalar> scl;
  Scalar leaf_out{0};
};

/// Row-major digit matrix of an encoded vector: rows x (width + 1) columns.
struct EncodedVector {
  std::size_t width = 8;
  std::size_t rows = 0;
  std::vector<std::int8_t> digits;

  std::size_t columns() const { return width + 1; }
  std::int8_t at(std::size_t row, std::size_t column) const { return digits[row * columns() + column]; }
};

inline void check_int8(std::span<const int> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < -128 || v[i] > 127) {
      throw RangeError(std::string(what) + "[" + std::to_string(i) + "] = " + std::to_string(v[i]) +
                       " is outside the 8b range [-128, 127]");
    }
  }
}

inline EncodedVector encode_vector(std::span<const int> values, std::size_t width = 8) {
  EncodedVector out;
  out.width = width;
  out.rows = values.size();
  out.digits.reserve(values.size() * (width + 1));
  for (int v : values) {
    const auto word = encode(v, width);
    out.digits.insert(out.digits.end(), word.digits().begin(), word.digits().end());
  }
  return out;
}

/// P1: averaged 1b MAC of one column. Entries are +-1 (0 for unused rows);
/// every one of the R_total rows loads the source line.
template <AnalogScalar Scalar = double>
Scalar in_column_sum(std::span<const std::int8_t> a_bits, std::span<const std::int8_t> w_bits, std::size_t r_total) {
  if (a_bits.size() != w_bits.size()) throw LengthError("activation and weight bit planes differ in length");
  if (r_total == 0) throw RangeError("R_total must be at least 1");
  if (a_bits.size() > r_total) throw CapacityError("more active rows than array rows");
  std::int64_t dot = 0;
  for (std::size_t j = 0; j < a_bits.size(); ++j) dot += a_bits[j] * w_bits[j];
  return from_ratio<Scalar>(dot, static_cast<std::int64_t>(r_total));
}

template <AnalogScalar Scalar>
Scalar weighted_merge(std::span<const Scalar> inputs, std::span<const Scalar> weights) {
  if (inputs.size() != weights.size()) {
    throw LengthError("network has " + std::to_string(weights.size()) + " inputs, got " +
                      std::to_string(inputs.size()) + " values");
  }
  Scalar acc(0);
  for (std::size_t i = 0; i < inputs.size(); ++i) acc += weights[i] * inputs[i];
  return acc;
}

/// P2: merge the source lines of one bank through its leaf network.
template <AnalogScalar Scalar = double>
Scalar in_bank_sum(std::span<const Scalar> scl, const CapNetwork& leaf) {
  const auto w = effective_weights<Scalar>(leaf);
  return weighted_merge<Scalar>(scl, w);
}

/// P3: merge the leaf outputs through the root network.
template <AnalogScalar Scalar = double>
Scalar in_array_sum(std::span<const Scalar> leaf_outs, const CapNetwork& root) {
  const auto w = effective_weights<Scalar>(root);
  return weighted_merge<Scalar>(leaf_outs, w);
}

/// Adder tree with the realized coefficients of its networks resolved once.
template <AnalogScalar Scalar = double>
class CaatTree {
public:
  CaatTree(std::span<const CapNetwork> leaves, const CapNetwork& root, std::size_t width = 8)
      : width_(width), root_weights_(effective_weights<Scalar>(root)) {
    const std::size_t cols = width + 1;
    if (root_weights_.size() != cols) {
      throw ConstructionError("root network needs " + std::to_string(cols) + " bank inputs");
    }
    if (leaves.size() != cols) throw ConstructionError("adder tree needs " + std::to_string(cols) + " leaf networks");
    for (const auto& leaf : leaves) {
      leaf_weights_.push_back(effective_weights<Scalar>(leaf));
      if (leaf_weights_.back().size() != cols) {
        throw ConstructionError("leaf network needs " + std::to_string(cols) + " column inputs");
      }
    }
  }

  std::size_t width() const { return width_; }
  std::size_t banks() const { return width_ + 1; }
  std::span<const Scalar> leaf_weights(std::size_t bank) const { return leaf_weights_.at(bank); }
  std::span<const Scalar> root_weights() const { return root_weights_; }

  /// All P1 column results first, then every bank merge, then the root.
  Scalar evaluate(const EncodedVector& a, const EncodedVector& w, std::size_t r_total) const {
    const auto banks = trace(a, w, r_total);
    std::vector<Scalar> outs;
    outs.reserve(banks.size());
    for (const auto& b : banks) outs.push_back(b.leaf_out);
    return weighted_merge<Scalar>(outs, root_weights_);
  }

  /// Bank by bank: columns of one bank, then its merge, then the next bank.
  Scalar evaluate_interleaved(const EncodedVector& a, const EncodedVector& w, std::size_t r_total) const {
    check_shapes(a, w, r_total);
    const std::size_t cols = width_ + 1;
    std::vector<Scalar> outs(cols);
    std::vector<Scalar> scl(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      for (std::size_t i = 0; i < cols; ++i) scl[i] = column(a, w, k, i, r_total);
      outs[k] = weighted_merge<Scalar>(scl, leaf_weights_[k]);
    }
    return weighted_merge<Scalar>(outs, root_weights_);
  }

  /// Per-bank source-line and leaf-output values.
  std::vector<BankState<Scalar>> trace(const EncodedVector& a, const EncodedVector& w, std::size_t r_total) const {
    check_shapes(a, w, r_total);
    const std::size_t cols = width_ + 1;
    std::vector<BankState<Scalar>> banks(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      banks[k].scl.resize(cols);
      for (std::size_t i = 0; i < cols; ++i) banks[k].scl[i] = column(a, w, k, i, r_total);
    }
    for (std::size_t k = 0; k < cols; ++k) banks[k].leaf_out = weighted_merge<Scalar>(banks[k].scl, leaf_weights_[k]);
    return banks;
  }

  Scalar mac(std::span<const int> a, std::span<const int> w, std::size_t r_total) const {
    check_int8(a, "A");
    check_int8(w, "W");
    if (a.size() != w.size()) throw LengthError("A and W differ in length");
    return evaluate(encode_vector(a, width_), encode_vector(w, width_), r_total);
  }

private:
  void check_shapes(const EncodedVector& a, const EncodedVector& w, std::size_t r_total) const {
    if (a.width != width_ || w.width != width_) throw RangeError("encoded vectors have the wrong width");
    if (a.rows != w.rows) throw LengthError("A and W differ in length");
    if (r_total == 0) throw RangeError("R_total must be at least 1");
    if (a.rows > r_total) throw CapacityError("vector longer than the array has rows");
  }

  // Bank k holds activation digit k; column i holds weight digit i.
  Scalar column(const EncodedVector& a, const EncodedVector& w, std::size_t k, std::size_t i,
                std::size_t r_total) const {
    std::int64_t dot = 0;
    const std::size_t stride = width_ + 1;
    const std::int8_t* ad = a.digits.data() + k;
    const std::int8_t* wd = w.digits.data() + i;
    for (std::size_t j = 0; j < a.rows; ++j) dot += ad[j * stride] * wd[j * stride];
    return from_ratio<Scalar>(dot, static_cast<std::int64_t>(r_total));
  }

  std::size_t width_;
  std::vector<std::vector<Scalar>> leaf_weights_;
  std::vector<Scalar> root_weights_;
};

/// One-shot composition of encode -> bit planes -> P1 -> P2 -> P3.
template <AnalogScalar Scalar = double>
Scalar caat_mac(std::span<const int> a, std::span<const int> w, std::span<const CapNetwork> leaves,
                const CapNetwork& root, std::size_t r_total) {
  return CaatTree<Scalar>(leaves, root).mac(a, w, r_total);
}

}  // namespace cdcim
