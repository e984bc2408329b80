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

// Quantized MLP running on the macro, one macro call per output neuron.
//
// Layer l computes code_o = convert(sum_i w_oi * x_i / (R * 128)) with R the
// model's macro_rows. Hidden layers use the ReLU conversion and pass their
// codes (0..127) straight on as the next layer's activations; the last layer
// uses the full signed conversion and the prediction is its argmax (ties go
// to the lowest index).

#include "cdcim/common.hpp"
#include "cdcim/finetune.hpp"
#include "cdcim/jsonio.hpp"
#include "cdcim/macro.hpp"
#include "cdcim/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace cdcim {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Dataset {
  std::size_t features = 0;
  std::size_t classes = 0;
  std::vector<std::vector<double>> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }

  Dataset head(std::size_t n) const {
    Dataset d{features, classes, {}, {}};
    n = std::min(n, size());
    d.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    d.y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    return d;
  }
};

struct SyntheticSpec {
  std::size_t classes = 3;
  std::size_t features = 16;
  std::size_t train = 600;
  std::size_t test = 200;
  double center_spread = 1.0;
  double noise = 1.0;
};

struct SyntheticTask {
  Dataset train;
  Dataset test;
};

/// Gaussian blobs. Class centers are drawn once; sample i has label i % classes.
inline SyntheticTask make_synthetic_task(std::uint64_t seed, const SyntheticSpec& spec = {}) {
  if (spec.classes < 2 || spec.features < 1) throw InputError("synthetic task needs >= 2 classes and >= 1 feature");
  auto rng = make_rng(seed, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.features));
  for (auto& c : centers)
    for (auto& v : c) v = spec.center_spread * unit(rng);

  auto draw = [&](std::size_t n) {
    Dataset d{spec.features, spec.classes, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(i % spec.classes);
      std::vector<double> x(spec.features);
      for (std::size_t f = 0; f < spec.features; ++f) x[f] = centers[static_cast<std::size_t>(label)][f] + spec.noise * unit(rng);
      d.x.push_back(std::move(x));
      d.y.push_back(label);
    }
    return d;
  };
  SyntheticTask task;
  task.train = draw(spec.train);
  task.test = draw(spec.test);
  return task;
}

namespace detail {

inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Header f0..f(n-1),label; values in shortest round-trip form.
inline void write_dataset_csv(std::ostream& os, const Dataset& d) {
  for (std::size_t f = 0; f < d.features; ++f) os << 'f' << f << ',';
  os << "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.x[i]) os << detail::shortest(v) << ',';
    os << d.y[i] << '\n';
  }
}

inline std::string dataset_csv(const Dataset& d) {
  std::ostringstream os;
  write_dataset_csv(os, d);
  return os.str();
}

/// FNV-1a over the CSV form.
inline std::uint64_t dataset_hash(const Dataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dataset_csv(d)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("dataset: empty file");
  Dataset d;
  {
    std::size_t cols = 1;
    for (char c : line) cols += c == ',' ? 1 : 0;
    if (cols < 2 || line.substr(line.rfind(',') + 1) != "label") {
      throw InputError("dataset line 1: header must be feature columns followed by 'label'");
    }
    d.features = cols - 1;
  }
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> x;
    std::size_t pos = 0;
    int label = -1;
    for (std::size_t col = 0; col <= d.features; ++col) {
      const std::size_t end = col == d.features ? line.size() : line.find(',', pos);
      if (end == std::string::npos) {
        throw InputError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(d.features + 1) +
                         " columns");
      }
      const char* b = line.data() + pos;
      const char* e = line.data() + end;
      if (col < d.features) {
        double v = 0.0;
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
          throw InputError("dataset line " + std::to_string(lineno) + ": bad number in column " + std::to_string(col + 1));
        }
        x.push_back(v);
      } else {
        const auto res = std::from_chars(b, e, label);
        if (res.ec != std::errc() || res.ptr != e || label < 0) {
          throw InputError("dataset line " + std::to_string(lineno) + ": label must be a non-negative integer");
        }
      }
      pos = end + 1;
    }
    max_label = std::max(max_label, label);
    d.x.push_back(std::move(x));
    d.y.push_back(label);
  }
  if (d.x.empty()) throw InputError("dataset has no samples");
  d.classes = static_cast<std::size_t>(max_label) + 1;
  return d;
}

// ---------------------------------------------------------------------------
// Float training
// ---------------------------------------------------------------------------

/// Bias-free MLP; weights[l] is out x in, row-major. ReLU on all but the last layer.
struct FloatMlp {
  std::vector<std::size_t> arch;
  std::vector<std::vector<double>> weights;

  std::vector<std::vector<double>> forward(std::span<const double> x) const {
    std::vector<std::vector<double>> acts{std::vector<double>(x.begin(), x.end())};
    for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
      const std::size_t in = arch[l];
      const std::size_t out = arch[l + 1];
      std::vector<double> z(out, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) z[o] += weights[l][o * in + i] * acts.back()[i];
        if (l + 2 < arch.size()) z[o] = std::max(0.0, z[o]);
      }
      acts.push_back(std::move(z));
    }
    return acts;
  }

  int predict(std::span<const double> x) const {
    const auto logits = forward(x).back();
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }

  double accuracy(const Dataset& d) const {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i) ok += predict(d.x[i]) == d.y[i] ? 1 : 0;
    return d.size() == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(d.size());
  }
};

struct TrainParams {
  std::size_t epochs = 300;
  double learning_rate = 0.05;
};

/// Full-batch gradient descent on softmax cross-entropy.
inline FloatMlp train_float_mlp(const Dataset& d, std::vector<std::size_t> arch, std::uint64_t seed,
                                const TrainParams& tp = {}) {
  if (arch.size() < 2) throw InputError("architecture needs at least an input and an output width");
  if (arch.front() != d.features) throw InputError("architecture input width does not match the dataset");
  if (arch.back() != d.classes) throw InputError("architecture output width does not match the class count");
  if (d.size() == 0) throw InputError("training set is empty");
  FloatMlp m;
  m.arch = arch;
  auto rng = make_rng(seed, 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const double s = std::sqrt(2.0 / static_cast<double>(arch[l]));
    std::vector<double> w(arch[l] * arch[l + 1]);
    for (auto& v : w) v = s * unit(rng);
    m.weights.push_back(std::move(w));
  }

  const std::size_t layers = arch.size() - 1;
  const double inv_n = 1.0 / static_cast<double>(d.size());
  for (std::size_t epoch = 0; epoch < tp.epochs; ++epoch) {
    std::vector<std::vector<double>> grad(layers);
    for (std::size_t l = 0; l < layers; ++l) grad[l].assign(m.weights[l].size(), 0.0);
    for (std::size_t s = 0; s < d.size(); ++s) {
      const auto acts = m.forward(d.x[s]);
      std::vector<double> delta = acts.back();
      const double mx = *std::max_element(delta.begin(), delta.end());
      double z = 0.0;
      for (auto& v : delta) z += (v = std::exp(v - mx));
      for (auto& v : delta) v /= z;
      delta[static_cast<std::size_t>(d.y[s])] -= 1.0;
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = arch[l];
        const std::size_t out = arch[l + 1];
        const auto& a = acts[l];
        for (std::size_t o = 0; o < out; ++o)
          for (std::size_t i = 0; i < in; ++i) grad[l][o * in + i] += delta[o] * a[i];
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
          if (a[i] <= 0.0) continue;
          for (std::size_t o = 0; o < out; ++o) prev[i] += m.weights[l][o * in + i] * delta[o];
        }
        delta = std::move(prev);
      }
    }
    for (std::size_t l = 0; l < layers; ++l)
      for (std::size_t k = 0; k < grad[l].size(); ++k) m.weights[l][k] -= tp.learning_rate * inv_n * grad[l][k];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Quantized model
// ---------------------------------------------------------------------------

struct QuantLayer {
  std::size_t rows = 0;  // input width
  std::size_t cols = 0;  // output neurons
  std::vector<int> weights;  // cols x rows, row-major (one row per neuron)
  double output_scale = 1.0;  // real value represented by one output code
  bool relu = true;

  std::span<const int> neuron(std::size_t o) const { return std::span<const int>(weights).subspan(o * rows, rows); }
};

struct QuantModel {
  std::vector<std::size_t> arch;
  double input_scale = 1.0;
  /// R in the per-neuron normalization; also the row count of the macro the model runs on.
  std::size_t macro_rows = 1152;
  std::vector<QuantLayer> layers;

  std::size_t outputs_per_sample() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.cols;
    return n;
  }

  void validate() const {
    if (layers.empty()) throw InputError("model has no layers");
    if (macro_rows < 1 || macro_rows > 1152) throw InputError("macro_rows must be 1..1152");
    if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw InputError("input_scale must be positive");
    if (arch.size() != layers.size() + 1) throw InputError("arch does not match the layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      const std::string where = "layer " + std::to_string(l) + ": ";
      if (L.rows != arch[l] || L.cols != arch[l + 1]) throw InputError(where + "shape does not match arch");
      if (L.rows > macro_rows) {
        throw CapacityError(where + std::to_string(L.rows) + " inputs exceed the macro's " + std::to_string(macro_rows) +
                            " rows (tiling is not supported)");
      }
      if (L.weights.size() != L.rows * L.cols) throw InputError(where + "weight count does not match rows * cols");
      check_int8(L.weights, "weights");
      if (!(L.output_scale > 0.0)) throw InputError(where + "output_scale must be positive");
      if (l + 1 < layers.size() && !L.relu) throw InputError(where + "hidden layers must use ReLU");
    }
  }

  std::vector<int> quantize_input(std::span<const double> x) const {
    if (x.size() != arch.front()) throw LengthError("input width does not match the model");
    std::vector<int> q;
    q.reserve(x.size());
    for (double v : x) q.push_back(static_cast<int>(clamp_value(round_half_away(v / input_scale), -128.0, 127.0)));
    return q;
  }
};

/// Clipping applied by quantize_model: each scale maps clip * (largest
/// magnitude) to 127, saturating anything beyond.
struct QuantClip {
  double input = 1.0;
  std::vector<double> layers;  // one per layer; missing entries mean 1.0
};

/// Symmetric per-layer 8b quantization. The input scale maps the clipped
/// largest training magnitude to 127; each layer's weights likewise.
inline QuantModel quantize_model(const FloatMlp& m, const Dataset& train, const QuantClip& clip = {},
                                 std::size_t macro_rows = 0) {
  QuantModel q;
  q.arch = m.arch;
  q.macro_rows = macro_rows != 0 ? macro_rows : *std::max_element(m.arch.begin(), m.arch.end() - 1);
  double xmax = 0.0;
  for (const auto& x : train.x)
    for (double v : x) xmax = std::max(xmax, std::abs(v));
  if (!(xmax > 0.0)) throw InputError("training inputs are all zero");
  if (!(clip.input > 0.0 && clip.input <= 1.0)) throw InputError("clip fractions must lie in (0, 1]");
  q.input_scale = clip.input * xmax / 127.0;
  double in_scale = q.input_scale;
  for (std::size_t l = 0; l + 1 < m.arch.size(); ++l) {
    const double c = l < clip.layers.size() ? clip.layers[l] : 1.0;
    if (!(c > 0.0 && c <= 1.0)) throw InputError("clip fractions must lie in (0, 1]");
    QuantLayer L;
    L.rows = m.arch[l];
    L.cols = m.arch[l + 1];
    L.relu = l + 2 < m.arch.size();
    double wmax = 0.0;
    for (double v : m.weights[l]) wmax = std::max(wmax, std::abs(v));
    const double ws = wmax > 0.0 ? c * wmax / 127.0 : 1.0;
    for (double v : m.weights[l]) L.weights.push_back(static_cast<int>(clamp_value(round_half_away(v / ws), -128.0, 127.0)));
    L.output_scale = in_scale * ws * static_cast<double>(q.macro_rows) * 128.0;
    in_scale = L.output_scale;
    q.layers.push_back(std::move(L));
  }
  q.validate();
  return q;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

inline int argmax_lowest(std::span<const int> v) {
  if (v.empty()) throw InputError("argmax of an empty vector");
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Digital ground-truth outputs of one layer.
inline std::vector<int> layer_reference(const QuantLayer& L, std::span<const int> x, std::size_t macro_rows) {
  if (x.size() != L.rows) throw LengthError("layer input width mismatch");
  std::vector<int> out(L.cols);
  for (std::size_t o = 0; o < L.cols; ++o) {
    out[o] = L.relu ? reference_mac_relu(x, L.neuron(o), macro_rows) : reference_mac(x, L.neuron(o), macro_rows);
  }
  return out;
}

inline int infer_reference(const QuantModel& m, std::span<const int> x) {
  std::vector<int> act(x.begin(), x.end());
  for (const auto& L : m.layers) act = layer_reference(L, act, m.macro_rows);
  return argmax_lowest(act);
}

/// A model whose weights are stored in a macro.
template <AnalogScalar Scalar = double>
class MappedModel {
public:
  MappedModel(const QuantModel& model, const Macro<Scalar>& macro) : model_(model), macro_(macro) {
    model.validate();
    if (macro.config().rows != model.macro_rows) {
      throw InputError("macro has " + std::to_string(macro.config().rows) + " rows, model expects " +
                       std::to_string(model.macro_rows));
    }
    for (const auto& L : model.layers) {
      std::vector<MacroState> states;
      for (std::size_t o = 0; o < L.cols; ++o) states.push_back(macro.load_weights(L.neuron(o)));
      states_.push_back(std::move(states));
    }
  }

  const QuantModel& model() const { return model_; }
  const Macro<Scalar>& macro() const { return macro_; }

  /// Raw output codes of layer l for activations x.
  std::vector<int> layer_codes(std::size_t l, std::span<const int> x) const {
    const auto& L = model_.layers.at(l);
    std::vector<int> out(L.cols);
    for (std::size_t o = 0; o < L.cols; ++o) {
      out[o] = (L.relu ? macro_.mac_relu(x, states_[l][o]) : macro_.mac(x, states_[l][o])).code;
    }
    return out;
  }

  /// Activations after layer l, with the optional correction applied.
  std::vector<int> layer_forward(std::size_t l, std::span<const int> x, const FineTuneParams* tune) const {
    auto codes = layer_codes(l, x);
    if (tune != nullptr) {
      const bool relu = model_.layers[l].relu;
      for (auto& c : codes) c = requantize(apply(*tune, static_cast<double>(c)), relu);
    }
    return codes;
  }

  int infer(std::span<const int> x, std::span<const LayerCalibration> tune = {}) const {
    if (!tune.empty() && tune.size() != model_.layers.size()) {
      throw InputError("need one calibration entry per layer");
    }
    std::vector<int> act(x.begin(), x.end());
    for (std::size_t l = 0; l < model_.layers.size(); ++l) {
      act = layer_forward(l, act, tune.empty() ? nullptr : &tune[l].params);
    }
    return argmax_lowest(act);
  }

private:
  const QuantModel& model_;
  const Macro<Scalar>& macro_;
  std::vector<std::vector<MacroState>> states_;
};

template <AnalogScalar Scalar = double>
int infer_on_macro(const QuantModel& m, std::span<const int> x, const Macro<Scalar>& macro,
                   std::span<const LayerCalibration> tune = {}) {
  return MappedModel<Scalar>(m, macro).infer(x, tune);
}

/// Per-layer statistics from one pass over the calibration inputs. Layers are
/// calibrated in order; layer l sees the corrected outputs of layer l - 1.
template <AnalogScalar Scalar = double>
std::vector<LayerCalibration> calibrate(const MappedModel<Scalar>& mm, std::span<const std::vector<int>> inputs,
                                        std::size_t threads = 1) {
  if (inputs.size() < 32) throw CalibrationError("calibration needs at least 32 samples");
  const auto& model = mm.model();
  std::vector<std::vector<int>> ideal(inputs.begin(), inputs.end());
  std::vector<std::vector<int>> measured(inputs.begin(), inputs.end());
  std::vector<LayerCalibration> out;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    std::vector<std::vector<int>> ideal_out(inputs.size());
    std::vector<std::vector<int>> codes(inputs.size());
    parallel_for(inputs.size(), threads, [&](std::size_t s) {
      ideal_out[s] = layer_reference(L, ideal[s], model.macro_rows);
      codes[s] = mm.layer_codes(l, measured[s]);
    });
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
      a.insert(a.end(), ideal_out[s].begin(), ideal_out[s].end());
      b.insert(b.end(), codes[s].begin(), codes[s].end());
    }
    LayerCalibration c;
    c.layer = l;
    c.stats = collect_stats(a, b);
    try {
      c.params = compute_params(c.stats);
    } catch (const CalibrationError& e) {
      throw CalibrationError("layer " + std::to_string(l) + ": " + e.what());
    }
    for (std::size_t s = 0; s < inputs.size(); ++s) {
      for (auto& v : codes[s]) v = requantize(apply(c.params, static_cast<double>(v)), L.relu);
      measured[s] = std::move(codes[s]);
      ideal[s] = std::move(ideal_out[s]);
    }
    out.push_back(c);
  }
  return out;
}

inline std::vector<std::vector<int>> quantize_inputs(const QuantModel& m, const Dataset& d) {
  if (d.features != m.arch.front()) throw InputError("dataset feature count does not match the model");
  std::vector<std::vector<int>> out;
  out.reserve(d.size());
  for (const auto& x : d.x) out.push_back(m.quantize_input(x));
  return out;
}

inline double reference_accuracy(const QuantModel& m, const Dataset& d) {
  const auto xs = quantize_inputs(m, d);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) ok += infer_reference(m, xs[i]) == d.y[i] ? 1 : 0;
  return xs.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(xs.size());
}

/// Grid search over clip fractions for the best quantized training accuracy.
/// Ties keep the earlier (less clipped) candidate.
inline QuantModel quantize_model_search(const FloatMlp& m, const Dataset& train) {
  static constexpr double kGrid[] = {1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2};
  const std::size_t layers = m.arch.size() - 1;
  QuantClip best;
  best.layers.assign(layers, 1.0);
  double best_acc = -1.0;
  QuantClip cur = best;
  // Coordinate-wise sweeps: input first, then each layer in order, twice.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k <= layers; ++k) {
      for (double g : kGrid) {
        QuantClip trial = cur;
        (k == 0 ? trial.input : trial.layers[k - 1]) = g;
        const double acc = reference_accuracy(quantize_model(m, train, trial), train);
        if (acc > best_acc) {
          best_acc = acc;
          best = trial;
        }
      }
      cur = best;
    }
  }
  return quantize_model(m, train, best);
}

struct TrainedTask {
  SyntheticTask task;
  QuantModel model;
  std::uint64_t seed = 0;  // seed actually used
  double float_accuracy = 0.0;
  double quantized_accuracy = 0.0;
};

/// Dataset, float training and quantization from one seed. If the quantized
/// test accuracy is below `min_accuracy` the next seed is tried.
inline TrainedTask train_synthetic(std::uint64_t seed, const SyntheticSpec& spec = {},
                                   std::vector<std::size_t> hidden = {16}, const TrainParams& tp = {},
                                   double min_accuracy = 0.9, std::size_t max_attempts = 16) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    TrainedTask t;
    t.seed = seed + attempt;
    t.task = make_synthetic_task(t.seed, spec);
    std::vector<std::size_t> arch{spec.features};
    arch.insert(arch.end(), hidden.begin(), hidden.end());
    arch.push_back(spec.classes);
    const FloatMlp fm = train_float_mlp(t.task.train, arch, t.seed, tp);
    t.model = quantize_model_search(fm, t.task.train);
    t.float_accuracy = fm.accuracy(t.task.test);
    t.quantized_accuracy = reference_accuracy(t.model, t.task.test);
    if (t.quantized_accuracy >= min_accuracy) return t;
  }
  throw CalibrationError("no seed in [" + std::to_string(seed) + ", " + std::to_string(seed + max_attempts) +
                         ") produced a model reaching the required accuracy");
}

template <AnalogScalar Scalar = double>
double macro_accuracy(const MappedModel<Scalar>& mm, const Dataset& d, std::span<const LayerCalibration> tune = {},
                      std::size_t threads = 1) {
  const auto xs = quantize_inputs(mm.model(), d);
  std::vector<int> pred(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) { pred[i] = mm.infer(xs[i], tune); });
  std::size_t ok = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) ok += pred[i] == d.y[i] ? 1 : 0;
  return xs.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const QuantModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : m.layers) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(L.weights.size());
    for (int w : L.weights) bytes.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(w)));
    layers.push_back({{"rows", L.rows},
                      {"cols", L.cols},
                      {"weights", base64_encode(bytes)},
                      {"output_scale", L.output_scale},
                      {"relu", L.relu}});
  }
  return {{"schema_version", 1},
          {"arch", m.arch},
          {"quantization", {{"bits", 8}, {"input_scale", m.input_scale}, {"macro_rows", m.macro_rows}}},
          {"layers", layers}};
}

inline QuantModel model_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"schema_version", "arch", "quantization", "layers"}, "model");
  if (detail::require_field<int>(j, "schema_version") != 1) throw InputError("unsupported model schema_version");
  QuantModel m;
  m.arch = detail::require_field<std::vector<std::size_t>>(j, "arch");
  const auto& q = j.at("quantization");
  detail::reject_unknown(q, {"bits", "input_scale", "macro_rows"}, "model quantization");
  if (detail::require_field<int>(q, "bits") != 8) throw InputError("only 8b models are supported");
  m.input_scale = detail::require_field<double>(q, "input_scale");
  m.macro_rows = detail::require_field<std::size_t>(q, "macro_rows");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw InputError("model needs a 'layers' array");
  for (const auto& lj : j.at("layers")) {
    detail::reject_unknown(lj, {"rows", "cols", "weights", "output_scale", "relu"}, "model layer");
    QuantLayer L;
    L.rows = detail::require_field<std::size_t>(lj, "rows");
    L.cols = detail::require_field<std::size_t>(lj, "cols");
    L.output_scale = detail::require_field<double>(lj, "output_scale");
    L.relu = detail::require_field<bool>(lj, "relu");
    for (std::uint8_t b : base64_decode(detail::require_field<std::string>(lj, "weights"))) {
      L.weights.push_back(static_cast<std::int8_t>(b));
    }
    m.layers.push_back(std::move(L));
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

struct NnExperimentConfig {
  double sigma_c = 0.0;
  double parasitic_c = 0.0;
  std::vector<std::uint64_t> seeds;
  std::size_t calibration_samples = 128;
  bool run_ideal = true;
  bool run_distorted = true;
  bool run_finetuned = true;
  std::size_t threads = 1;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> distorted;
  std::optional<double> finetuned;
  std::vector<LayerCalibration> calibration;
};

struct EvalResult {
  double reference = 0.0;
  std::optional<double> ideal;
  std::vector<SeedResult> per_seed;
  std::size_t conversions_per_sample = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Ideal accuracy on a mismatch-free macro (exact arithmetic); per seed, the
/// accuracy of a mismatched macro without and with calibration. Calibration
/// inputs are the first `calibration_samples` of `calib`.
inline EvalResult run_nn_experiment(const QuantModel& model, const Dataset& test, const Dataset& calib,
                                    const NnExperimentConfig& cfg) {
  model.validate();
  EvalResult r;
  r.reference = reference_accuracy(model, test);
  r.conversions_per_sample = model.outputs_per_sample();
  if (cfg.run_ideal) {
    const Macro<Rational> macro(MacroConfig::ideal(model.macro_rows));
    r.ideal = macro_accuracy(MappedModel<Rational>(model, macro), test, {}, cfg.threads);
  }
  if (!cfg.run_distorted && !cfg.run_finetuned) return r;
  const auto calib_x = quantize_inputs(model, calib.head(cfg.calibration_samples));
  for (std::uint64_t seed : cfg.seeds) {
    SeedResult s;
    s.seed = seed;
    const Macro<double> macro(
        MacroConfig::with_mismatch(model.macro_rows, MismatchSpec::uniform(cfg.sigma_c), seed, cfg.parasitic_c));
    const MappedModel<double> mm(model, macro);
    if (cfg.run_distorted) s.distorted = macro_accuracy(mm, test, {}, cfg.threads);
    if (cfg.run_finetuned) {
      s.calibration = calibrate(mm, calib_x, cfg.threads);
      s.finetuned = macro_accuracy(mm, test, s.calibration, cfg.threads);
    }
    r.per_seed.push_back(std::move(s));
  }
  return r;
}

inline nlohmann::json to_json(const EvalResult& r, const NnExperimentConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["sigma_c"] = cfg.sigma_c;
  j["parasitic_c"] = cfg.parasitic_c;
  j["calibration_samples"] = cfg.calibration_samples;
  j["seeds"] = cfg.seeds;
  j["conversions_per_sample"] = r.conversions_per_sample;
  j["reference_accuracy"] = r.reference;
  j["ideal"] = r.ideal ? nlohmann::json(*r.ideal) : nlohmann::json(nullptr);
  std::vector<double> dist;
  std::vector<double> fine;
  std::size_t wins = 0;
  std::size_t paired = 0;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_seed) {
    nlohmann::json e{{"seed", s.seed}};
    if (s.distorted) {
      e["distorted"] = *s.distorted;
      dist.push_back(*s.distorted);
    }
    if (s.finetuned) {
      e["finetuned"] = *s.finetuned;
      fine.push_back(*s.finetuned);
      nlohmann::json cal = nlohmann::json::array();
      for (const auto& c : s.calibration) cal.push_back(to_json(c));
      e["calibration"] = cal;
    }
    if (s.distorted && s.finetuned) {
      ++paired;
      wins += *s.finetuned >= *s.distorted ? 1 : 0;
    }
    per.push_back(e);
  }
  j["per_seed"] = per;
  j["distorted_median"] = dist.empty() ? nlohmann::json(nullptr) : nlohmann::json(median(dist));
  j["finetuned_median"] = fine.empty() ? nlohmann::json(nullptr) : nlohmann::json(median(fine));
  if (paired > 0) {
    j["finetuned_ge_distorted"] = wins;
    j["median_improvement"] = median(fine) - median(dist);
  }
  return j;
}

}  // namespace cdcim
