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

// cdcim: experiment runner for the charge-domain CiM macro model.
//
// Every subcommand takes --config FILE (a JSON object whose keys are the
// long option names with '-' replaced by '_'); explicit flags win over the
// file. Results go to --out, else $CDCIM_OUT_DIR/<default name>, else stdout.
//
// Exit codes: 0 success, 1 check or experiment failure, 2 usage/input error.

#include "cdcim/cdcim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

/// Raised when a run completes but its check does not hold.
class CheckFailed : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cdcim::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw cdcim::InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Integers separated by commas and/or whitespace; '#' starts a comment.
std::vector<int> read_int8_vector(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ',' || std::isspace(static_cast<unsigned char>(line[pos])))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ',' && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      int v = 0;
      const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
      const std::string where = path + ":" + std::to_string(lineno) + ": ";
      if (res.ec != std::errc() || res.ptr != line.data() + end) {
        throw cdcim::InputError(where + "'" + line.substr(pos, end - pos) + "' is not an integer");
      }
      if (v < -128 || v > 127) throw cdcim::RangeError(where + std::to_string(v) + " is outside [-128, 127]");
      out.push_back(v);
      pos = end;
    }
  }
  if (out.empty()) throw cdcim::InputError(path + ": no values");
  return out;
}

cdcim::Dataset read_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return cdcim::read_dataset_csv(in);
  } catch (const cdcim::InputError& e) {
    throw cdcim::InputError(path + ": " + e.what());
  }
}

cdcim::QuantModel read_model(const std::string& path) { return cdcim::model_from_json(read_json_file(path)); }

/// Writes `content` to `out`, else $CDCIM_OUT_DIR/default_name, else stdout.
void emit(const std::string& content, const std::string& out, const std::string& default_name) {
  std::string path = out;
  if (path.empty()) {
    if (const char* dir = std::getenv("CDCIM_OUT_DIR"); dir != nullptr && *dir != '\0') {
      fs::create_directories(dir);
      path = (fs::path(dir) / default_name).string();
    }
  }
  if (path.empty()) {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw cdcim::InputError("cannot write '" + path + "'");
  f << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// "0-9", "1,4,7" or a mix such as "0-3,10".
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    auto num = [&](const std::string& s) {
      std::uint64_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw cdcim::InputError("bad seed list entry '" + item + "'");
      }
      return v;
    };
    if (dash == std::string::npos) {
      out.push_back(num(item));
    } else {
      const auto lo = num(item.substr(0, dash));
      const auto hi = num(item.substr(dash + 1));
      if (hi < lo || hi - lo > 100000) throw cdcim::InputError("bad seed range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw cdcim::InputError("seed list is empty");
  return out;
}

// ---------------------------------------------------------------------------
// Config file + flag override
// ---------------------------------------------------------------------------

/// Binds config-file keys to options. A key is applied only when its flag was
/// not given on the command line; keys without a binding are rejected.
class ConfigBinder {
public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    bind(opt, target);
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& flag, bool& target, const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, target, help);
    bind(opt, target);
    return opt;
  }

  void apply(const std::string& config_path) const {
    if (config_path.empty()) return;
    const json j = read_json_file(config_path);
    if (!j.is_object()) throw cdcim::InputError("config must be a JSON object");
    for (const auto& item : j.items()) {
      const auto it = entries_.find(item.key());
      if (it == entries_.end()) throw cdcim::InputError("unknown config key '" + item.key() + "'");
      if (it->second.opt->count() > 0) continue;
      try {
        it->second.set(item.value());
      } catch (const json::exception& e) {
        throw cdcim::InputError("config key '" + item.key() + "': " + e.what());
      }
    }
  }

private:
  struct Entry {
    CLI::Option* opt;
    std::function<void(const json&)> set;
  };

  template <class T>
  void bind(CLI::Option* opt, T& target) {
    std::string key = opt->get_name(false, true);
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    for (auto& c : key) c = c == '-' ? '_' : c;
    entries_[key] = Entry{opt, [&target](const json& v) { target = v.get<T>(); }};
  }

  std::map<std::string, Entry> entries_;
};

struct Common {
  std::string config;
  std::string out;
  std::size_t threads = 1;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Common& common,
                      std::map<CLI::App*, ConfigBinder>& binders, bool threads = false) {
  CLI::App* sub = app.add_subcommand(name, help);
  ConfigBinder& binder = binders[sub];
  sub->add_option("--config", common.config, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
  binder.add(sub, "--out", common.out, "output file (default: $CDCIM_OUT_DIR/<name> or stdout)");
  if (threads) binder.add(sub, "--threads", common.threads, "worker threads (0 = all cores)");
  return sub;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct MacOpts {
  std::string a;
  std::string w;
  std::size_t rows = 1152;
  double sigma_c = 0.0;
  std::uint64_t seed = 0;
  bool full = false;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw cdcim::InputError(std::string(flag) + " is required");
}

int run_mac(const MacOpts& o, const Common& c) {
  require(o.a, "--a");
  require(o.w, "--w");
  const auto a = read_int8_vector(o.a);
  const auto w = read_int8_vector(o.w);
  if (a.size() != w.size()) {
    throw cdcim::LengthError("A has " + std::to_string(a.size()) + " values, W has " + std::to_string(w.size()));
  }
  if (a.size() > o.rows) throw cdcim::CapacityError("vectors are longer than the array has rows");
  const bool ideal = o.sigma_c == 0.0;
  cdcim::AdcResult r;
  if (ideal) {
    const cdcim::Macro<cdcim::Rational> m(cdcim::MacroConfig::ideal(o.rows));
    const auto st = m.load_weights(w);
    r = o.full ? m.mac(a, st) : m.mac_relu(a, st);
  } else {
    const cdcim::Macro<double> m(
        cdcim::MacroConfig::with_mismatch(o.rows, cdcim::MismatchSpec::uniform(o.sigma_c), o.seed));
    const auto st = m.load_weights(w);
    r = o.full ? m.mac(a, st) : m.mac_relu(a, st);
  }
  const int ref = o.full ? cdcim::reference_mac(a, w, o.rows) : cdcim::reference_mac_relu(a, w, o.rows);
  const json j{{"schema_version", 1},  {"rows", o.rows},          {"length", a.size()},
               {"sigma_c", o.sigma_c}, {"mode", o.full ? "full" : "relu"},
               {"dot", cdcim::exact_dot(a, w)},
               {"code", r.code},       {"comparisons", r.comparisons}, {"early_stopped", r.early_stopped},
               {"reference", ref},     {"match", r.code == ref}};
  emit(dump(j), c.out, "mac.json");
  if (ideal && r.code != ref) throw CheckFailed("mismatch-free macro disagrees with the reference");
  return kExitOk;
}

struct MonteCarloOpts {
  double sigma_c = cdcim::kCalibratedSigmaC;
  std::size_t samples = 1000;
  std::uint64_t seed = cdcim::kMonteCarloSeed;
  std::string sweep;
};

int run_montecarlo(const MonteCarloOpts& o, const Common& c) {
  if (!o.sweep.empty()) {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
    char sep1 = 0;
    char sep2 = 0;
    std::istringstream ss(o.sweep);
    if (!(ss >> lo >> sep1 >> hi >> sep2 >> step) || sep1 != ':' || sep2 != ':' || !(step > 0.0) || hi < lo || lo < 0.0) {
      throw cdcim::InputError("--sweep expects lo:hi:step with 0 <= lo <= hi and step > 0");
    }
    std::ostringstream os;
    os << "sigma_c,samples,fraction_ge_7b,median_max_inl_lsb\n";
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = lo + step * static_cast<double>(i);
      const auto res = cdcim::leaf_monte_carlo(s, o.samples, o.seed, c.threads);
      std::vector<double> inl;
      for (const auto& r : res) inl.push_back(r.max_inl);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.6g,%zu,%.4f,%.6f\n", s, o.samples, cdcim::fraction_at_least(res, 7.0),
                    cdcim::median(inl));
      os << buf;
    }
    emit(os.str(), c.out, "sweep.csv");
    return kExitOk;
  }
  const auto res = cdcim::leaf_monte_carlo(o.sigma_c, o.samples, o.seed, c.threads);
  std::ostringstream os;
  cdcim::write_montecarlo_csv(os, res);
  emit(os.str(), c.out, "montecarlo.csv");
  std::fprintf(stderr, "sigma_c=%g samples=%zu fraction_ge_7b=%.4f\n", o.sigma_c, o.samples,
               cdcim::fraction_at_least(res, 7.0));
  return kExitOk;
}

struct InlOpts {
  std::string target = "adc";
  double sigma_c = 0.0;
  std::uint64_t seed = 0;
  std::size_t points_per_lsb = 64;
  bool fixture = false;
};

int run_inl(const InlOpts& o, const Common& c) {
  std::ostringstream os;
  if (o.target == "adc") {
    cdcim::AdcConfig cfg = cdcim::AdcConfig::ideal(8, false);
    if (o.fixture) {
      cfg = cdcim::dac_fixture_config();
    } else {
      cfg.dac = cdcim::inject_mismatch(cfg.dac, o.sigma_c, o.seed);
    }
    const auto inl = cdcim::measure_inl(cfg, o.points_per_lsb);
    cdcim::write_inl_csv(os, inl);
    std::fprintf(stderr, "max_inl_lsb=%.4f effective_bits=%.4f missing_codes=%zu monotone=%d\n",
                 inl.profile.max_abs_inl, inl.profile.effective_bits, inl.missing_codes, inl.monotone ? 1 : 0);
  } else if (o.target == "leaf" || o.target == "root") {
    if (o.fixture) throw cdcim::InputError("--fixture applies to the adc target only");
    const auto net = o.target == "leaf" ? cdcim::build_caat_leaf() : cdcim::build_caat_root();
    const auto mis = cdcim::inject_mismatch(net, o.sigma_c, o.seed);
    cdcim::write_network_inl_csv(os, mis);
    const auto prof = cdcim::network_inl(mis);
    std::fprintf(stderr, "max_inl_lsb=%.4f effective_bits=%.4f\n", prof.max_abs_inl, prof.effective_bits);
  } else {
    throw cdcim::InputError("--target must be adc, leaf or root");
  }
  emit(os.str(), c.out, "inl.csv");
  return kExitOk;
}

struct CostOpts {
  std::string params;
  std::string format = "json";
};

cdcim::CostParams load_cost_params(const std::string& path) {
  return path.empty() ? cdcim::CostParams{} : cdcim::cost_params_from_json(read_json_file(path));
}

int run_cost(const CostOpts& o, const Common& c) {
  const auto report = cdcim::comparative_report(load_cost_params(o.params));
  if (o.format == "json") {
    emit(dump(cdcim::to_json(report)), c.out, "cost.json");
  } else if (o.format == "csv") {
    std::ostringstream os;
    cdcim::write_cost_csv(os, report);
    emit(os.str(), c.out, "cost.csv");
  } else {
    throw cdcim::InputError("--format must be json or csv");
  }
  return kExitOk;
}

int run_table1(const CostOpts& o, const Common& c) {
  const auto rows = cdcim::table1_rows(load_cost_params(o.params));
  if (o.format == "csv") {
    std::ostringstream os;
    cdcim::write_table1_csv(os, rows);
    emit(os.str(), c.out, "table1.csv");
  } else if (o.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"metric", r.metric},
                     {"condition", r.condition},
                     {"model", r.model},
                     {"published", r.published},
                     {"rel_error", r.rel_error()}});
    }
    emit(dump(json{{"schema_version", 1}, {"rows", arr}}), c.out, "table1.json");
  } else {
    throw cdcim::InputError("--format must be json or csv");
  }
  return kExitOk;
}

struct NnOpts {
  std::string model;
  std::string data;
  std::string calib_data;
  std::string modes = "ideal,distorted,finetuned";
  std::string seeds = "0-9";
  std::uint64_t seed = 0;
  double sigma_c = cdcim::kCalibratedSigmaC;
  double parasitic_c = cdcim::kNnParasiticC;
  std::size_t calib_samples = 128;
  bool require_recovery = false;
};

int run_calibrate(const NnOpts& o, const Common& c) {
  require(o.model, "--model");
  require(o.data, "--data");
  const auto model = read_model(o.model);
  const auto data = read_dataset(o.calib_data.empty() ? o.data : o.calib_data);
  const cdcim::Macro<double> macro(cdcim::MacroConfig::with_mismatch(
      model.macro_rows, cdcim::MismatchSpec::uniform(o.sigma_c), o.seed, o.parasitic_c));
  const cdcim::MappedModel<double> mm(model, macro);
  const auto xs = cdcim::quantize_inputs(model, data.head(o.calib_samples));
  const auto cal = cdcim::calibrate(mm, xs, c.threads);
  json layers = json::array();
  for (const auto& l : cal) layers.push_back(cdcim::to_json(l));
  emit(dump(json{{"schema_version", 1},
                 {"sigma_c", o.sigma_c},
                 {"parasitic_c", o.parasitic_c},
                 {"seed", o.seed},
                 {"samples", xs.size()},
                 {"layers", layers}}),
       c.out, "calibration.json");
  return kExitOk;
}

int run_nn(const NnOpts& o, const Common& c) {
  require(o.model, "--model");
  require(o.data, "--data");
  const auto model = read_model(o.model);
  const auto test = read_dataset(o.data);
  const auto calib = o.calib_data.empty() ? test : read_dataset(o.calib_data);
  cdcim::NnExperimentConfig cfg;
  cfg.sigma_c = o.sigma_c;
  cfg.parasitic_c = o.parasitic_c;
  cfg.calibration_samples = o.calib_samples;
  cfg.threads = c.threads;
  cfg.run_ideal = cfg.run_distorted = cfg.run_finetuned = false;
  std::stringstream ss(o.modes);
  std::string m;
  while (std::getline(ss, m, ',')) {
    if (m == "ideal") {
      cfg.run_ideal = true;
    } else if (m == "distorted") {
      cfg.run_distorted = true;
    } else if (m == "finetuned") {
      cfg.run_finetuned = true;
    } else {
      throw cdcim::InputError("unknown mode '" + m + "' (expected ideal, distorted, finetuned)");
    }
  }
  if (cfg.run_distorted || cfg.run_finetuned) cfg.seeds = parse_seed_list(o.seeds);
  const auto result = cdcim::run_nn_experiment(model, test, calib, cfg);
  const json j = cdcim::to_json(result, cfg);
  emit(dump(j), c.out, "nn.json");
  if (result.ideal && *result.ideal != result.reference) {
    throw CheckFailed("mismatch-free macro accuracy differs from the reference accuracy");
  }
  if (o.require_recovery) {
    if (!cfg.run_distorted || !cfg.run_finetuned) {
      throw cdcim::InputError("--require-recovery needs the distorted and finetuned modes");
    }
    const std::size_t wins = j.at("finetuned_ge_distorted").get<std::size_t>();
    const bool ok = j.at("finetuned_median").get<double>() >= j.at("distorted_median").get<double>() &&
                    wins * 10 >= cfg.seeds.size() * 8;
    if (!ok) throw CheckFailed("fine-tune did not recover accuracy");
  }
  return kExitOk;
}

struct SynthOpts {
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_synth(const SynthOpts& o) {
  std::string dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("CDCIM_OUT_DIR");
    dir = env != nullptr && *env != '\0' ? env : ".";
  }
  fs::create_directories(dir);
  const auto t = cdcim::train_synthetic(o.seed);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw cdcim::InputError("cannot write '" + (fs::path(dir) / name).string() + "'");
    f << text;
  };
  write("model.json", dump(cdcim::to_json(t.model)));
  write("train.csv", cdcim::dataset_csv(t.task.train));
  write("test.csv", cdcim::dataset_csv(t.task.test));
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cdcim::dataset_hash(t.task.train)));
  std::cout << dump(json{{"schema_version", 1},
                         {"requested_seed", o.seed},
                         {"seed", t.seed},
                         {"float_accuracy", t.float_accuracy},
                         {"quantized_accuracy", t.quantized_accuracy},
                         {"train_hash", hash}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral simulator of a charge-domain compute-in-memory macro"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cdcim 1.0.0");

  Common common;
  std::map<CLI::App*, ConfigBinder> binders;

  MacOpts mac;
  auto* mac_cmd = add_command(app, "mac", "one MAC + ReLU cycle against the digital reference", common, binders);
  binders[mac_cmd].add(mac_cmd, "--a", mac.a, "activation vector file (int8 CSV)");
  binders[mac_cmd].add(mac_cmd, "--w", mac.w, "weight vector file (int8 CSV)");
  binders[mac_cmd].add(mac_cmd, "--rows", mac.rows, "array rows R_total")->check(CLI::Range(1, 1152));
  binders[mac_cmd].add(mac_cmd, "--sigma-c", mac.sigma_c, "capacitor mismatch (0 = exact arithmetic)")->check(CLI::NonNegativeNumber);
  binders[mac_cmd].add(mac_cmd, "--seed", mac.seed, "mismatch seed");
  binders[mac_cmd].add_flag(mac_cmd, "--full", mac.full, "full signed conversion instead of ReLU mode");

  MonteCarloOpts mc;
  auto* mc_cmd = add_command(app, "montecarlo", "leaf-network mismatch Monte Carlo", common, binders, true);
  binders[mc_cmd].add(mc_cmd, "--sigma-c", mc.sigma_c, "relative capacitor mismatch")->check(CLI::NonNegativeNumber);
  binders[mc_cmd].add(mc_cmd, "--samples", mc.samples, "number of samples")->check(CLI::PositiveNumber);
  binders[mc_cmd].add(mc_cmd, "--seed", mc.seed, "base seed");
  binders[mc_cmd].add(mc_cmd, "--sweep", mc.sweep, "lo:hi:step sigma sweep; emits one summary row per sigma");

  InlOpts inl;
  auto* inl_cmd = add_command(app, "inl", "INL of the ADC or a summation network", common, binders);
  binders[inl_cmd].add(inl_cmd, "--target", inl.target, "adc, leaf or root")->check(CLI::IsMember({"adc", "leaf", "root"}));
  binders[inl_cmd].add(inl_cmd, "--sigma-c", inl.sigma_c, "relative capacitor mismatch")->check(CLI::NonNegativeNumber);
  binders[inl_cmd].add(inl_cmd, "--seed", inl.seed, "mismatch seed");
  binders[inl_cmd].add(inl_cmd, "--points-per-lsb", inl.points_per_lsb, "ADC ramp density")->check(CLI::Range(16, 4096));
  binders[inl_cmd].add_flag(inl_cmd, "--fixture", inl.fixture, "use the committed DAC mismatch fixture");

  CostOpts cost;
  auto* cost_cmd = add_command(app, "cost", "comparative energy/area/throughput report", common, binders);
  binders[cost_cmd].add(cost_cmd, "--params", cost.params, "cost parameter JSON (defaults when omitted)");
  binders[cost_cmd].add(cost_cmd, "--format", cost.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  CostOpts table;
  table.format = "csv";
  auto* table_cmd = add_command(app, "table1", "published comparison points reproduced by the cost model", common, binders);
  binders[table_cmd].add(table_cmd, "--params", table.params, "cost parameter JSON (defaults when omitted)");
  binders[table_cmd].add(table_cmd, "--format", table.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));

  NnOpts cal;
  auto* cal_cmd = add_command(app, "calibrate", "per-layer fine-tune parameters for one mismatched macro", common,
                              binders, true);
  binders[cal_cmd].add(cal_cmd, "--model", cal.model, "model JSON");
  binders[cal_cmd].add(cal_cmd, "--data", cal.data, "calibration dataset CSV");
  binders[cal_cmd].add(cal_cmd, "--sigma-c", cal.sigma_c, "relative capacitor mismatch")->check(CLI::NonNegativeNumber);
  binders[cal_cmd].add(cal_cmd, "--parasitic-c", cal.parasitic_c, "parasitic C per floating node")->check(CLI::NonNegativeNumber);
  binders[cal_cmd].add(cal_cmd, "--seed", cal.seed, "mismatch seed");
  binders[cal_cmd].add(cal_cmd, "--calib-samples", cal.calib_samples, "calibration samples used")->check(CLI::Range(32, 1000000));

  NnOpts nn;
  auto* nn_cmd = add_command(app, "nn", "ideal / distorted / fine-tuned inference accuracy", common, binders, true);
  binders[nn_cmd].add(nn_cmd, "--model", nn.model, "model JSON");
  binders[nn_cmd].add(nn_cmd, "--data", nn.data, "evaluation dataset CSV");
  binders[nn_cmd].add(nn_cmd, "--calib-data", nn.calib_data, "calibration dataset CSV (default: --data)");
  binders[nn_cmd].add(nn_cmd, "--modes", nn.modes, "comma-separated subset of ideal,distorted,finetuned");
  binders[nn_cmd].add(nn_cmd, "--seeds", nn.seeds, "mismatch seeds, e.g. 0-9 or 1,5,7");
  binders[nn_cmd].add(nn_cmd, "--sigma-c", nn.sigma_c, "relative capacitor mismatch")->check(CLI::NonNegativeNumber);
  binders[nn_cmd].add(nn_cmd, "--parasitic-c", nn.parasitic_c, "parasitic C per floating node")->check(CLI::NonNegativeNumber);
  binders[nn_cmd].add(nn_cmd, "--calib-samples", nn.calib_samples, "calibration samples used")->check(CLI::Range(32, 1000000));
  binders[nn_cmd].add_flag(nn_cmd, "--require-recovery", nn.require_recovery,
                  "exit 1 unless fine-tuning matches or beats distortion in >= 80% of seeds and in median");

  SynthOpts synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic task and a trained 8b model");
  synth_cmd->add_option("--config", common.config, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
  binders[synth_cmd].add(synth_cmd, "--seed", synth.seed, "task seed");
  binders[synth_cmd].add(synth_cmd, "--out-dir", synth.out_dir, "directory for model.json, train.csv, test.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (const auto& [sub, b] : binders)
      if (sub->parsed()) b.apply(common.config);
    if (*mac_cmd) return run_mac(mac, common);
    if (*mc_cmd) return run_montecarlo(mc, common);
    if (*inl_cmd) return run_inl(inl, common);
    if (*cost_cmd) return run_cost(cost, common);
    if (*table_cmd) return run_table1(table, common);
    if (*cal_cmd) return run_calibrate(cal, common);
    if (*nn_cmd) return run_nn(nn, common);
    if (*synth_cmd) return run_synth(synth);
  } catch (const CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitFailed;
  } catch (const cdcim::CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  } catch (const cdcim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
