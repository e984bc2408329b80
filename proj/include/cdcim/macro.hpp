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

#include "cdcim/adc.hpp"
#include "cdcim/caat.hpp"
#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"
#include "cdcim/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cdcim {

/// Relative capacitor mismatch per network family.
struct MismatchSpec {
  double leaf = 0.0;
  double root = 0.0;
  double dac = 0.0;

  static MismatchSpec uniform(double sigma_c) { return {sigma_c, sigma_c, sigma_c}; }
};

struct MacroConfig {
  std::size_t banks = 9;
  std::size_t rows = 1152;
  std::size_t cols_per_bank = 9;
  std::vector<CapNetwork> leaves;
  CapNetwork root;
  AdcConfig adc;
  std::uint64_t seed = 0;

  /// Mismatch-free macro.
  static MacroConfig ideal(std::size_t rows = 1152) {
    MacroConfig cfg;
    cfg.rows = rows;
    cfg.leaves.assign(cfg.banks, build_caat_leaf());
    cfg.root = build_caat_root(cfg.banks);
    cfg.adc = AdcConfig::ideal(8, true);
    cfg.validate();
    return cfg;
  }

  /// Every leaf, the root and the ADC DAC get independent mismatch draws
  /// derived from `seed`. `parasitic_c` adds that much capacitance from every
  /// floating node of the adder tree to ground.
  static MacroConfig with_mismatch(std::size_t rows, const MismatchSpec& sigma, std::uint64_t seed,
                                   double parasitic_c = 0.0) {
    MacroConfig cfg;
    cfg.rows = rows;
    cfg.seed = seed;
    const auto leaf = with_parasitics(build_caat_leaf(), parasitic_c);
    for (std::size_t k = 0; k < cfg.banks; ++k) cfg.leaves.push_back(inject_mismatch(leaf, sigma.leaf, derive_seed(seed, k)));
    cfg.root = inject_mismatch(with_parasitics(build_caat_root(cfg.banks), parasitic_c), sigma.root,
                               derive_seed(seed, 100));
    cfg.adc = AdcConfig::ideal(8, true);
    cfg.adc.dac = inject_mismatch(cfg.adc.dac, sigma.dac, derive_seed(seed, 200));
    cfg.validate();
    return cfg;
  }

  bool mismatch_free() const {
    if (!root.mismatch_free() || !adc.dac.mismatch_free()) return false;
    for (const auto& l : leaves)
      if (!l.mismatch_free()) return false;
    return true;
  }

  void validate() const {
    if (banks != 9 || cols_per_bank != 9) throw ConstructionError("the macro has 9 banks of 9 columns (8b operands)");
    if (rows < 1) throw ConstructionError("the macro needs at least one row");
    if (leaves.size() != banks) throw ConstructionError("one leaf network per bank is required");
    if (adc.bits != 8) throw ConstructionError("the macro uses an 8b converter");
  }
};

/// Stored weights. One copy serves all banks: every bank sees the same weight
/// column bits and differs only in which activation bit drives it.
struct MacroState {
  std::vector<int> values;
  EncodedVector words;

  std::size_t size() const { return values.size(); }
  BalancedWord word(std::size_t i) const {
    const auto begin = words.digits.begin() + static_cast<std::ptrdiff_t>(i * words.columns());
    return BalancedWord(words.width, std::vector<std::int8_t>(begin, begin + static_cast<std::ptrdiff_t>(words.columns())));
  }
};

template <AnalogScalar Scalar = double>
class Macro {
public:
  explicit Macro(MacroConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))), tree_(cfg_.leaves, cfg_.root), adc_(cfg_.adc) {}

  Macro(const Macro& other)
      : cfg_(other.cfg_), tree_(other.tree_), adc_(other.adc_), conversions_(other.conversions_.load()) {}
  Macro& operator=(const Macro&) = delete;

  const MacroConfig& config() const { return cfg_; }
  const CaatTree<Scalar>& tree() const { return tree_; }
  const SarAdc<Scalar>& adc() const { return adc_; }

  MacroState load_weights(std::span<const int> w) const {
    if (w.size() > cfg_.rows) {
      throw CapacityError(std::to_string(w.size()) + " weights do not fit in " + std::to_string(cfg_.rows) + " rows");
    }
    check_int8(w, "W");
    return MacroState{std::vector<int>(w.begin(), w.end()), encode_vector(w, 8)};
  }

  /// Normalized adder-tree output for A against the stored weights.
  Scalar analog_mac(std::span<const int> a, const MacroState& state) const {
    if (a.size() != state.size()) {
      throw LengthError("activation length " + std::to_string(a.size()) + " does not match " +
                        std::to_string(state.size()) + " stored weights");
    }
    check_int8(a, "A");
    return tree_.evaluate(encode_vector(a, 8), state.words, cfg_.rows);
  }

  /// One CiM cycle: analog MAC, then a single ReLU-mode conversion.
  AdcResult mac_relu(std::span<const int> a, const MacroState& state) const {
    const Scalar v = analog_mac(a, state);
    conversions_.fetch_add(1, std::memory_order_relaxed);
    return adc_.convert_relu(v);
  }

  /// Same cycle with a full signed conversion (no ReLU).
  AdcResult mac(std::span<const int> a, const MacroState& state) const {
    const Scalar v = analog_mac(a, state);
    conversions_.fetch_add(1, std::memory_order_relaxed);
    return adc_.convert_full(v);
  }

  std::uint64_t conversions() const { return conversions_.load(std::memory_order_relaxed); }

private:
  MacroConfig cfg_;
  CaatTree<Scalar> tree_;
  SarAdc<Scalar> adc_;
  mutable std::atomic<std::uint64_t> conversions_{0};
};

inline std::int64_t exact_dot(std::span<const int> a, std::span<const int> w) {
  if (a.size() != w.size()) throw LengthError("A and W differ in length");
  std::int64_t dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<std::int64_t>(a[i]) * w[i];
  return dot;
}

/// Signed digital ground truth: clamp(round_half_away(dot / (rows * 128))).
inline int reference_mac(std::span<const int> a, std::span<const int> w, std::size_t rows) {
  check_int8(a, "A");
  check_int8(w, "W");
  if (rows == 0) throw RangeError("rows must be at least 1");
  if (a.size() > rows) throw CapacityError("vector longer than the array has rows");
  const std::int64_t code = round_half_away(exact_dot(a, w), static_cast<std::int64_t>(rows) * 128);
  return static_cast<int>(clamp_value<std::int64_t>(code, -128, 127));
}

inline int reference_mac_relu(std::span<const int> a, std::span<const int> w, std::size_t rows) {
  return std::max(0, reference_mac(a, w, rows));
}

}  // namespace cdcim
