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

// Bipolar successive-approximation ADC driven by a capacitive DAC.
//
// The SAR searches an offset-binary code u in [0, 2^bits) and reports the
// signed code u - 2^(bits-1). The DAC level for trial code u is
//   L(u) = sum_b w_b * bit_b(u)
// with w_b the DAC network's realized bit weights, and the comparison
// threshold is FS * (2 L(u) - 1) - FS / 2^bits. An ideal DAC reproduces the
// mid-tread quantizer clamp(round_half_away(v * 2^(bits-1) / FS)).
//
// In ReLU mode the first decision is the sign of v against the DAC mid-scale.
// A negative sign ends the conversion with code 0 after one comparison.

#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace cdcim {

struct AdcConfig {
  std::size_t bits = 8;
  double full_scale = 1.0;
  CapNetwork dac = build_sar_dac(8);
  bool relu_mode = false;

  static AdcConfig ideal(std::size_t bits = 8, bool relu = false) {
    AdcConfig cfg;
    cfg.bits = bits;
    cfg.dac = build_sar_dac(bits);
    cfg.relu_mode = relu;
    return cfg;
  }
};

struct AdcResult {
  int code = 0;
  int comparisons = 0;
  bool early_stopped = false;

  bool operator==(const AdcResult&) const = default;
};

template <AnalogScalar Scalar = double>
class SarAdc {
public:
  explicit SarAdc(const AdcConfig& cfg) : bits_(cfg.bits), relu_mode_(cfg.relu_mode) {
    if (bits_ < 1 || bits_ > 16) throw ConstructionError("ADC resolution must be 1..16 bits");
    if (!(cfg.full_scale > 0.0)) throw ConstructionError("ADC full scale must be positive");
    const auto w = effective_weights<Scalar>(cfg.dac);
    if (w.size() != bits_) {
      throw ConstructionError("DAC network has " + std::to_string(w.size()) + " bit inputs, ADC needs " +
                              std::to_string(bits_));
    }
    const Scalar fs = from_double<Scalar>(cfg.full_scale);
    const std::size_t levels = std::size_t{1} << bits_;
    const Scalar half_lsb = fs / Scalar(static_cast<long long>(levels));
    thresholds_.resize(levels);
    for (std::size_t u = 0; u < levels; ++u) {
      Scalar level(0);
      for (std::size_t b = 0; b < bits_; ++b)
        if (((u >> b) & 1U) != 0) level += w[b];
      thresholds_[u] = fs * (Scalar(2) * level - Scalar(1)) - half_lsb;
    }
    sign_threshold_ = thresholds_[levels / 2] + half_lsb;
  }

  std::size_t bits() const { return bits_; }
  int min_code() const { return -(1 << (bits_ - 1)); }
  int max_code() const { return (1 << (bits_ - 1)) - 1; }
  bool relu_mode() const { return relu_mode_; }
  const Scalar& threshold(std::size_t offset_code) const { return thresholds_.at(offset_code); }

  /// Conversion honoring the configured mode.
  AdcResult convert(const Scalar& v) const { return relu_mode_ ? convert_relu(v) : convert_full(v); }

  AdcResult convert_full(const Scalar& v) const {
    check_input(v);
    AdcResult r;
    std::size_t u = 0;
    for (std::size_t b = bits_; b-- > 0;) {
      const std::size_t trial = u | (std::size_t{1} << b);
      ++r.comparisons;
      if (passes(v, trial)) u = trial;
    }
    r.code = static_cast<int>(u) + min_code();
    return r;
  }

  AdcResult convert_relu(const Scalar& v) const {
    check_input(v);
    AdcResult r;
    r.comparisons = 1;
    // v at exactly the sign threshold counts as non-negative.
    if (v < sign_threshold_) {
      r.early_stopped = true;
      return r;
    }
    std::size_t u = std::size_t{1} << (bits_ - 1);
    for (std::size_t b = bits_ - 1; b-- > 0;) {
      const std::size_t trial = u | (std::size_t{1} << b);
      ++r.comparisons;
      if (passes(v, trial)) u = trial;
    }
    r.code = static_cast<int>(u) + min_code();
    return r;
  }

private:
  static void check_input(const Scalar& v) {
    if constexpr (std::is_same_v<Scalar, double>) {
      if (!std::isfinite(v)) throw InputError("ADC input is not finite");
    }
  }

  // Trial codes above zero resolve ties upward, codes at or below zero resolve
  // them downward, which is rounding half away from zero.
  bool passes(const Scalar& v, std::size_t trial) const {
    const int code = static_cast<int>(trial) + min_code();
    return code >= 1 ? !(v < thresholds_[trial]) : thresholds_[trial] < v;
  }

  std::size_t bits_;
  bool relu_mode_;
  std::vector<Scalar> thresholds_;
  Scalar sign_threshold_{0};
};

template <AnalogScalar Scalar = double>
AdcResult convert(const Scalar& v, const AdcConfig& cfg) {
  return SarAdc<Scalar>(cfg).convert(v);
}

template <AnalogScalar Scalar = double>
AdcResult convert_relu(const Scalar& v, const AdcConfig& cfg) {
  return SarAdc<Scalar>(cfg).convert_relu(v);
}

/// Ideal mid-tread quantizer, for checking a converter against.
inline int ideal_adc_code(double v, std::size_t bits = 8, double full_scale = 1.0) {
  const double half = std::ldexp(1.0, static_cast<int>(bits) - 1);
  const double code = std::round(v * half / full_scale);
  return static_cast<int>(clamp_value(code, -half, half - 1.0));
}

struct AdcInl {
  std::vector<int> codes;          // codes whose lower transition was measured
  std::vector<double> transitions;  // measured transition voltage, in LSB
  InlProfile profile;               // profile.inl[i] belongs to codes[i]
  bool monotone = true;
  std::size_t missing_codes = 0;
};

/// Ramp measurement of the full (non-ReLU) transfer. Each code's lower edge is
/// located to within half a ramp step; INL is end-point fit over the edges.
inline AdcInl measure_inl(const AdcConfig& cfg, std::size_t points_per_lsb = 64) {
  if (cfg.relu_mode) throw InputError("INL measurement needs the full transfer (relu_mode = false)");
  if (points_per_lsb < 16) throw InputError("INL ramp needs at least 16 points per LSB");
  const SarAdc<double> adc(cfg);
  const double lsb = cfg.full_scale / std::ldexp(1.0, static_cast<int>(cfg.bits) - 1);
  const std::size_t steps = 2 * (std::size_t{1} << (cfg.bits - 1)) * points_per_lsb;
  const double dv = 2.0 * cfg.full_scale / static_cast<double>(steps);

  const int lo = adc.min_code();
  const int hi = adc.max_code();
  std::vector<double> edge(static_cast<std::size_t>(hi - lo + 1), std::nan(""));

  AdcInl out;
  int prev_code = lo;
  // Samples sit half a step off the code grid so no sample lands on an edge.
  double prev_v = -cfg.full_scale - 0.5 * dv;
  for (std::size_t s = 0; s < steps; ++s) {
    const double v = -cfg.full_scale + dv * (static_cast<double>(s) + 0.5);
    const int code = adc.convert_full(v).code;
    if (code < prev_code) out.monotone = false;
    for (int c = std::max(prev_code + 1, lo + 1); c <= code; ++c) {
      auto& e = edge[static_cast<std::size_t>(c - lo)];
      if (std::isnan(e)) e = 0.5 * (prev_v + v);
    }
    if (code > prev_code) prev_code = code;
    prev_v = v;
  }

  std::vector<TransferPoint> pts;
  for (int c = lo + 1; c <= hi; ++c) {
    const double e = edge[static_cast<std::size_t>(c - lo)];
    if (std::isnan(e)) {
      ++out.missing_codes;
      continue;
    }
    out.codes.push_back(c);
    out.transitions.push_back(e / lsb);
    pts.push_back({static_cast<double>(c) - 0.5, e / lsb});
  }
  out.profile = inl_profile(pts, static_cast<double>(cfg.bits));
  out.monotone = out.monotone && out.profile.monotone;
  return out;
}

inline void write_inl_csv(std::ostream& os, const AdcInl& inl) {
  os << "code,inl_lsb\n";
  char buf[64];
  for (std::size_t i = 0; i < inl.codes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.6f\n", inl.codes[i], inl.profile.inl[i]);
    os << buf;
  }
}

}  // namespace cdcim
