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
#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"
#include "cdcim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <vector>

namespace cdcim {

/// Relative capacitor mismatch at which 70% of leaf samples (1000 draws,
/// kMonteCarloSeed) reach 7 effective bits. Found with `cdcim montecarlo --sweep`.
inline constexpr double kCalibratedSigmaC = 0.012;
inline constexpr std::uint64_t kMonteCarloSeed = 1;

/// DAC mismatch draw whose ramp-measured max INL is 1.2 LSB.
inline constexpr double kDacFixtureSigma = 0.012;
inline constexpr std::uint64_t kDacFixtureSeed = 46;

/// Parasitic capacitance (units of C) on every floating adder-tree node in the
/// inference experiment.
inline constexpr double kNnParasiticC = 1.0;

inline AdcConfig dac_fixture_config() {
  AdcConfig cfg = AdcConfig::ideal(8, false);
  cfg.dac = inject_mismatch(cfg.dac, kDacFixtureSigma, kDacFixtureSeed);
  return cfg;
}

struct LeafSample {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double max_inl = 0.0;
  double effective_bits = 0.0;
};

/// Sample k draws its mismatch from derive_seed(seed, k), so results do not
/// depend on the worker count.
inline std::vector<LeafSample> leaf_monte_carlo(double sigma_c, std::size_t n_samples, std::uint64_t seed,
                                                std::size_t threads = 1,
                                                const LeafConfig& leaf_cfg = LeafConfig::standard()) {
  if (!(sigma_c >= 0.0)) throw InputError("sigma_c must be non-negative");
  if (n_samples == 0) throw InputError("n_samples must be at least 1");
  const CapNetwork leaf = build_caat_leaf(leaf_cfg);
  std::vector<LeafSample> out(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t k) {
    const std::uint64_t s = derive_seed(seed, k);
    const auto prof = network_inl(inject_mismatch(leaf, sigma_c, s));
    out[k] = LeafSample{k, s, prof.max_abs_inl, prof.effective_bits};
  });
  return out;
}

inline double fraction_at_least(const std::vector<LeafSample>& samples, double bits) {
  if (samples.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) n += s.effective_bits >= bits ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

inline void write_montecarlo_csv(std::ostream& os, const std::vector<LeafSample>& samples) {
  os << "sample,seed,max_inl_lsb,effective_bits\n";
  char buf[96];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.6f,%.6f\n", s.index, static_cast<unsigned long long>(s.seed), s.max_inl,
                  s.effective_bits);
    os << buf;
  }
}

/// Per-code INL of a summation network's +-1 transfer.
inline void write_network_inl_csv(std::ostream& os, const CapNetwork& net, double target_bits = 8.0) {
  const auto realized = effective_weights<double>(net);
  const auto ideal = effective_weights<double>(net.without_mismatch());
  auto pts = network_transfer(realized, ideal, std::ldexp(1.0, static_cast<int>(target_bits) - 1));
  const auto prof = inl_profile(pts, target_bits);
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.ideal < b.ideal; });
  os << "ideal_lsb,realized_lsb,inl_lsb\n";
  char buf[96];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", pts[i].ideal, pts[i].realized, prof.inl[i]);
    os << buf;
  }
}

}  // namespace cdcim
