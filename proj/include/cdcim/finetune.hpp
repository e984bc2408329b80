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

// Output-based affine correction. Measured outputs y are mapped to
//   scale * y + offset,  scale = sigma0 / sigma1,  offset = mu0 - scale * mu1
// so the corrected batch has the ideal batch's mean and (population) std.

#include "cdcim/common.hpp"
#include "cdcim/jsonio.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cdcim {

struct CalibrationStats {
  double mu0 = 0.0;
  double sigma0 = 0.0;
  double mu1 = 0.0;
  double sigma1 = 0.0;
  /// Population covariance of (ideal, measured); negative means the
  /// distortion inverts the output ordering.
  double covariance = 0.0;
  std::size_t count = 0;
};

struct FineTuneParams {
  double scale = 1.0;
  double offset = 0.0;

  static FineTuneParams identity() { return {}; }
};

inline CalibrationStats collect_stats(std::span<const double> ideal, std::span<const double> measured) {
  if (ideal.size() != measured.size()) {
    throw LengthError("ideal and measured batches differ in length (" + std::to_string(ideal.size()) + " vs " +
                      std::to_string(measured.size()) + ")");
  }
  if (ideal.size() < 2) throw CalibrationError("calibration needs at least two samples");
  const double n = static_cast<double>(ideal.size());
  CalibrationStats s;
  s.count = ideal.size();
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    s.mu0 += ideal[i];
    s.mu1 += measured[i];
  }
  s.mu0 /= n;
  s.mu1 /= n;
  double v0 = 0.0;
  double v1 = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    const double d0 = ideal[i] - s.mu0;
    const double d1 = measured[i] - s.mu1;
    v0 += d0 * d0;
    v1 += d1 * d1;
    c += d0 * d1;
  }
  s.sigma0 = std::sqrt(v0 / n);
  s.sigma1 = std::sqrt(v1 / n);
  s.covariance = c / n;
  return s;
}

inline FineTuneParams compute_params(const CalibrationStats& s) {
  if (s.count < 2) throw CalibrationError("calibration needs at least two samples");
  if (!(s.sigma0 >= 0.0) || !(s.sigma1 >= 0.0)) throw CalibrationError("standard deviations must be non-negative");
  if (s.sigma1 == 0.0) throw CalibrationError("measured outputs are constant; no correction can be derived");
  if (s.covariance < 0.0) throw CalibrationError("measured outputs are anti-correlated with the ideal ones");
  FineTuneParams p;
  p.scale = s.sigma0 / s.sigma1;
  p.offset = s.mu0 - p.scale * s.mu1;
  if (!std::isfinite(p.scale) || !(p.scale > 0.0)) {
    throw CalibrationError("derived scale is not a finite positive number");
  }
  return p;
}

inline double apply(const FineTuneParams& p, double y) { return p.scale * y + p.offset; }

inline std::vector<double> apply_all(const FineTuneParams& p, std::span<const double> y) {
  std::vector<double> out;
  out.reserve(y.size());
  for (double v : y) out.push_back(apply(p, v));
  return out;
}

/// Corrected value re-quantized to an 8b activation with the macro's rounding.
inline int requantize(double v, bool relu) {
  const double r = round_half_away(v);
  return static_cast<int>(clamp_value(r, relu ? 0.0 : -128.0, 127.0));
}

struct LayerCalibration {
  std::size_t layer = 0;
  CalibrationStats stats;
  FineTuneParams params;
};

inline nlohmann::json to_json(const LayerCalibration& c) {
  return {{"layer", c.layer},     {"scale", c.params.scale}, {"offset", c.params.offset},
          {"count", c.stats.count}, {"mu0", c.stats.mu0},      {"sigma0", c.stats.sigma0},
          {"mu1", c.stats.mu1},     {"sigma1", c.stats.sigma1}};
}

inline LayerCalibration layer_calibration_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"layer", "scale", "offset", "count", "mu0", "sigma0", "mu1", "sigma1"},
                         "layer calibration");
  LayerCalibration c;
  c.layer = detail::require_field<std::size_t>(j, "layer");
  c.params.scale = detail::require_field<double>(j, "scale");
  c.params.offset = detail::require_field<double>(j, "offset");
  detail::read_field(j, "count", c.stats.count);
  detail::read_field(j, "mu0", c.stats.mu0);
  detail::read_field(j, "sigma0", c.stats.sigma0);
  detail::read_field(j, "mu1", c.stats.mu1);
  detail::read_field(j, "sigma1", c.stats.sigma1);
  if (!std::isfinite(c.params.scale) || !(c.params.scale > 0.0) || !std::isfinite(c.params.offset)) {
    throw InputError("layer " + std::to_string(c.layer) + ": scale must be finite and positive");
  }
  return c;
}

}  // namespace cdcim
