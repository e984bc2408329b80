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

// Analytical cost model of the single-converter macro against a baseline that
// replicates the array per activation bit and converts every bit plane.
//
// Energy and area are normalized to the proposed macro (breakdown fractions sum
// to 1). The baseline differs only where the architectures differ:
//   ADC:  scaled by baseline_conversions / proposed_conversions
//   CAAT: scaled by baseline_caat_area_scale (area only)
// Everything else (array, digital periphery) is carried over unchanged.

#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"
#include "cdcim/jsonio.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace cdcim {

struct Breakdown {
  double array = 0.0;
  double caat = 0.0;
  double adc = 0.0;
  double digital = 0.0;

  double sum() const { return array + caat + adc + digital; }

  void validate(const char* what) const {
    for (double f : {array, caat, adc, digital}) {
      if (!(f >= 0.0 && f <= 1.0)) throw InputError(std::string(what) + " fractions must lie in [0, 1]");
    }
    if (std::abs(sum() - 1.0) > 1e-9) throw InputError(std::string(what) + " fractions must sum to 1");
  }
};

struct CostParams {
  std::size_t rows = 1152;
  double clock_hz = 1.0e9;
  double adc_clock_hz = 500.0e6;
  std::size_t adc_bits = 8;
  double cycles_per_op = 45.0;
  double energy_per_op_pj = 0.0971;
  double neg_output_prob = 0.5;
  double proposed_conversions = 1.0;
  double baseline_conversions = 8.0;
  double baseline_caat_area_scale = 1.0;
  /// Leaf network used for the baseline capacitance: "binary" or "hybrid".
  std::string baseline_network = "binary";
  // Only the ADC shares are measured; the split of the remainder is a placeholder.
  Breakdown energy{0.52, 0.25, 0.08, 0.15};
  Breakdown area{0.80, 0.12, 0.03, 0.05};

  void validate() const {
    if (rows < 1) throw InputError("rows must be at least 1");
    if (!(clock_hz > 0.0) || !(adc_clock_hz > 0.0)) throw InputError("clock frequencies must be positive");
    if (adc_bits < 1 || adc_bits > 16) throw InputError("adc_bits must be 1..16");
    if (!(cycles_per_op >= 1.0)) throw InputError("cycles_per_op must be at least 1");
    if (!(energy_per_op_pj > 0.0)) throw InputError("energy_per_op_pj must be positive");
    if (!(neg_output_prob >= 0.0 && neg_output_prob <= 1.0)) throw InputError("neg_output_prob must lie in [0, 1]");
    if (!(proposed_conversions > 0.0) || !(baseline_conversions > 0.0)) {
      throw InputError("conversion counts must be positive");
    }
    if (!(baseline_caat_area_scale > 0.0)) throw InputError("baseline_caat_area_scale must be positive");
    if (baseline_network != "binary" && baseline_network != "hybrid") {
      throw InputError("baseline_network must be \"binary\" or \"hybrid\"");
    }
    energy.validate("energy");
    area.validate("area");
  }
};

struct CostReport {
  double gops = 0.0;
  double tops_per_watt = 0.0;
  double latency_ns = 0.0;
  double adc_conversion_ns = 0.0;
  double adc_energy_ratio_vs_baseline = 0.0;
  double relu_energy_factor = 0.0;
  double macro_efficiency_ratio = 0.0;
  double macro_efficiency_ratio_relu = 0.0;
  double area_ratio = 0.0;
  double capacitance_proposed_C = 0.0;
  double capacitance_baseline_C = 0.0;
  double capacitance_ratio = 0.0;
  Breakdown energy;
  Breakdown area;
};

/// 2 * rows operations (one multiply, one add per row) per cycles_per_op clocks.
inline double throughput_gops(double rows, double clock_hz, double cycles_per_op) {
  if (!(rows > 0.0) || !(clock_hz > 0.0) || !(cycles_per_op > 0.0)) {
    throw InputError("throughput parameters must be positive");
  }
  return 2.0 * rows * clock_hz / cycles_per_op / 1e9;
}

inline double adc_energy_ratio(double proposed_conversions = 1.0, double baseline_conversions = 8.0) {
  if (!(proposed_conversions > 0.0) || !(baseline_conversions > 0.0)) {
    throw InputError("conversion counts must be positive");
  }
  return proposed_conversions / baseline_conversions;
}

/// Expected fraction of bit cycles executed when negative results stop after
/// the sign decision.
inline double relu_energy_factor(double neg_output_prob, std::size_t bits = 8) {
  if (!(neg_output_prob >= 0.0 && neg_output_prob <= 1.0)) throw InputError("probability must lie in [0, 1]");
  if (bits < 1) throw InputError("bits must be at least 1");
  const double b = static_cast<double>(bits);
  return (neg_output_prob * 1.0 + (1.0 - neg_output_prob) * b) / b;
}

/// pJ per operation to TOPS/W.
inline double tops_per_watt(double energy_per_op_pj) {
  if (!(energy_per_op_pj > 0.0)) throw InputError("energy per op must be positive");
  return 1.0 / energy_per_op_pj;
}

inline CostReport comparative_report(const CostParams& p) {
  p.validate();
  CostReport r;
  r.gops = throughput_gops(static_cast<double>(p.rows), p.clock_hz, p.cycles_per_op);
  r.tops_per_watt = tops_per_watt(p.energy_per_op_pj);
  r.latency_ns = p.cycles_per_op / p.clock_hz * 1e9;
  r.adc_conversion_ns = static_cast<double>(p.adc_bits) / p.adc_clock_hz * 1e9;

  const double conv_scale = p.baseline_conversions / p.proposed_conversions;
  r.adc_energy_ratio_vs_baseline = adc_energy_ratio(p.proposed_conversions, p.baseline_conversions);
  r.relu_energy_factor = relu_energy_factor(p.neg_output_prob, p.adc_bits);

  const double e_other = p.energy.array + p.energy.caat + p.energy.digital;
  const double e_baseline = e_other + p.energy.adc * conv_scale;
  r.macro_efficiency_ratio = e_baseline / (e_other + p.energy.adc);
  r.macro_efficiency_ratio_relu = e_baseline / (e_other + p.energy.adc * r.relu_energy_factor);

  const double a_baseline =
      p.area.array + p.area.digital + p.area.caat * p.baseline_caat_area_scale + p.area.adc * conv_scale;
  r.area_ratio = a_baseline / p.area.sum();

  r.capacitance_proposed_C = build_caat_leaf().total_capacitance();
  r.capacitance_baseline_C =
      p.baseline_network == "binary" ? build_binary_leaf().total_capacitance() : r.capacitance_proposed_C;
  r.capacitance_ratio = r.capacitance_baseline_C / r.capacitance_proposed_C;
  r.energy = p.energy;
  r.area = p.area;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Breakdown& b) {
  return {{"array", b.array}, {"caat", b.caat}, {"adc", b.adc}, {"digital", b.digital}};
}

inline Breakdown breakdown_from_json(const nlohmann::json& j, const char* what) {
  detail::reject_unknown(j, {"array", "caat", "adc", "digital"}, what);
  Breakdown b;
  detail::read_field(j, "array", b.array);
  detail::read_field(j, "caat", b.caat);
  detail::read_field(j, "adc", b.adc);
  detail::read_field(j, "digital", b.digital);
  return b;
}

inline nlohmann::json to_json(const CostParams& p) {
  return {{"rows", p.rows},
          {"clock_hz", p.clock_hz},
          {"adc_clock_hz", p.adc_clock_hz},
          {"adc_bits", p.adc_bits},
          {"cycles_per_op", p.cycles_per_op},
          {"energy_per_op_pj", p.energy_per_op_pj},
          {"neg_output_prob", p.neg_output_prob},
          {"proposed_conversions", p.proposed_conversions},
          {"baseline_conversions", p.baseline_conversions},
          {"baseline_caat_area_scale", p.baseline_caat_area_scale},
          {"baseline_network", p.baseline_network},
          {"energy", to_json(p.energy)},
          {"area", to_json(p.area)}};
}

/// Keys absent from `j` keep their defaults; unknown keys are rejected.
inline CostParams cost_params_from_json(const nlohmann::json& j, CostParams p = {}) {
  detail::reject_unknown(j,
                         {"rows", "clock_hz", "adc_clock_hz", "adc_bits", "cycles_per_op", "energy_per_op_pj",
                          "neg_output_prob", "proposed_conversions", "baseline_conversions",
                          "baseline_caat_area_scale", "baseline_network", "energy", "area"},
                         "cost parameters");
  detail::read_field(j, "rows", p.rows);
  detail::read_field(j, "clock_hz", p.clock_hz);
  detail::read_field(j, "adc_clock_hz", p.adc_clock_hz);
  detail::read_field(j, "adc_bits", p.adc_bits);
  detail::read_field(j, "cycles_per_op", p.cycles_per_op);
  detail::read_field(j, "energy_per_op_pj", p.energy_per_op_pj);
  detail::read_field(j, "neg_output_prob", p.neg_output_prob);
  detail::read_field(j, "proposed_conversions", p.proposed_conversions);
  detail::read_field(j, "baseline_conversions", p.baseline_conversions);
  detail::read_field(j, "baseline_caat_area_scale", p.baseline_caat_area_scale);
  detail::read_field(j, "baseline_network", p.baseline_network);
  if (j.contains("energy")) p.energy = breakdown_from_json(j.at("energy"), "energy");
  if (j.contains("area")) p.area = breakdown_from_json(j.at("area"), "area");
  p.validate();
  return p;
}

inline nlohmann::json to_json(const CostReport& r) {
  return {{"schema_version", 1},
          {"gops", r.gops},
          {"tops_per_watt", r.tops_per_watt},
          {"latency_ns", r.latency_ns},
          {"adc_conversion_ns", r.adc_conversion_ns},
          {"adc_energy_ratio_vs_baseline", r.adc_energy_ratio_vs_baseline},
          {"relu_energy_factor", r.relu_energy_factor},
          {"macro_efficiency_ratio", r.macro_efficiency_ratio},
          {"macro_efficiency_ratio_relu", r.macro_efficiency_ratio_relu},
          {"area_ratio", r.area_ratio},
          {"capacitance_proposed_C", r.capacitance_proposed_C},
          {"capacitance_baseline_C", r.capacitance_baseline_C},
          {"capacitance_ratio", r.capacitance_ratio},
          {"energy_breakdown", to_json(r.energy)},
          {"area_breakdown", to_json(r.area)}};
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

/// metric,value rows, one per report field.
inline void write_cost_csv(std::ostream& os, const CostReport& r) {
  os << "metric,value\n";
  const std::pair<const char*, double> rows[] = {
      {"gops", r.gops},
      {"tops_per_watt", r.tops_per_watt},
      {"latency_ns", r.latency_ns},
      {"adc_conversion_ns", r.adc_conversion_ns},
      {"adc_energy_ratio_vs_baseline", r.adc_energy_ratio_vs_baseline},
      {"relu_energy_factor", r.relu_energy_factor},
      {"macro_efficiency_ratio", r.macro_efficiency_ratio},
      {"macro_efficiency_ratio_relu", r.macro_efficiency_ratio_relu},
      {"area_ratio", r.area_ratio},
      {"capacitance_proposed_C", r.capacitance_proposed_C},
      {"capacitance_baseline_C", r.capacitance_baseline_C},
      {"capacitance_ratio", r.capacitance_ratio},
      {"energy_adc_fraction", r.energy.adc},
      {"area_adc_fraction", r.area.adc},
  };
  for (const auto& [name, v] : rows) os << name << ',' << detail::fmt(v) << '\n';
}

// ---------------------------------------------------------------------------
// Published comparison points the model reproduces
// ---------------------------------------------------------------------------

struct Table1Row {
  std::string metric;
  std::string condition;
  double model = 0.0;
  double published = 0.0;

  double rel_error() const { return std::abs(model - published) / std::abs(published); }
};

inline std::vector<Table1Row> table1_rows(const CostParams& p = {}) {
  p.validate();
  const double rows = static_cast<double>(p.rows);
  const CostReport r = comparative_report(p);
  return {
      {"throughput_gops", "1.0 GHz", throughput_gops(rows, 1.0e9, p.cycles_per_op), 51.2},
      {"throughput_gops", "700 MHz", throughput_gops(rows, 700.0e6, p.cycles_per_op), 35.8},
      {"tops_per_watt", "1.0 GHz, 0.2833 pJ/op", tops_per_watt(0.2833), 3.53},
      {"tops_per_watt", "240 MHz, 0.0971 pJ/op", tops_per_watt(0.0971), 10.3},
      {"tops_per_watt", "700 MHz, 0.0990 pJ/op", tops_per_watt(0.0990), 10.1},
      {"adc_energy_ratio", "1 vs 8 conversions", r.adc_energy_ratio_vs_baseline, 0.125},
      {"capacitance_ratio", "8b leaf, 1032C vs 96C", r.capacitance_ratio, 10.8},
      {"macro_efficiency_ratio", "vs parallel-activation baseline", r.macro_efficiency_ratio, 1.6},
      {"area_ratio", "vs parallel-activation baseline", r.area_ratio, 1.2},
  };
}

inline void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  os << "metric,condition,model,published,rel_error\n";
  for (const auto& row : rows) {
    os << row.metric << ",\"" << row.condition << "\"," << detail::fmt(row.model) << ',' << detail::fmt(row.published)
       << ',' << detail::fmt(row.rel_error()) << '\n';
  }
}

}  // namespace cdcim
