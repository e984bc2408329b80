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

#include "cdcim/nn.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

namespace cdcim {
namespace {

QuantModel hand_model() {
  QuantModel m;
  m.arch = {2, 2, 3};
  m.macro_rows = 2;
  m.input_scale = 1.0;
  m.layers.push_back(QuantLayer{2, 2, {64, 32, -128, 10}, 1.0, true});
  m.layers.push_back(QuantLayer{2, 3, {50, 50, -3, 9, 127, 0}, 1.0, false});
  m.validate();
  return m;
}

TEST(InferReference, HandComputedTwoLayerExample) {
  const auto m = hand_model();
  const std::vector<int> x{100, -50};
  // Layer 0: 4800 / 256 = 18.75 -> 19; -13300 / 256 -> negative -> 0.
  EXPECT_EQ(layer_reference(m.layers[0], x, 2), (std::vector<int>{19, 0}));
  // Layer 1 on (19, 0): 950/256 = 3.71 -> 4; -57/256 -> 0; 2413/256 = 9.43 -> 9.
  EXPECT_EQ(layer_reference(m.layers[1], std::vector<int>{19, 0}, 2), (std::vector<int>{4, 0, 9}));
  EXPECT_EQ(infer_reference(m, x), 2);
}

TEST(InferReference, DominantLogitWins) {
  QuantModel m;
  m.arch = {3, 3};
  m.macro_rows = 3;
  m.layers.push_back(QuantLayer{3, 3, {127, 0, 0, 0, 127, 0, 0, 0, 127}, 1.0, false});
  m.validate();
  EXPECT_EQ(infer_reference(m, std::vector<int>{10, 120, -5}), 1);
  EXPECT_EQ(infer_reference(m, std::vector<int>{-100, -120, 90}), 2);
}

TEST(InferReference, AllZeroWeightsPickClassZero) {
  QuantModel m;
  m.arch = {4, 3};
  m.macro_rows = 4;
  m.layers.push_back(QuantLayer{4, 3, std::vector<int>(12, 0), 1.0, false});
  EXPECT_EQ(infer_reference(m, std::vector<int>{5, 6, 7, 8}), 0);
  EXPECT_EQ(argmax_lowest(std::vector<int>{3, 7, 7}), 1);
  EXPECT_THROW(argmax_lowest(std::vector<int>{}), InputError);
}

TEST(QuantModel, LayersWiderThanTheMacroAreRejected) {
  auto m = hand_model();
  m.arch = {3, 2, 3};
  m.layers[0].rows = 3;
  m.layers[0].weights = {1, 2, 3, 4, 5, 6};
  EXPECT_THROW(m.validate(), CapacityError);
  auto bad = hand_model();
  bad.layers[0].weights[0] = 300;
  EXPECT_THROW(bad.validate(), RangeError);
  auto linear_hidden = hand_model();
  linear_hidden.layers[0].relu = false;
  EXPECT_THROW(linear_hidden.validate(), InputError);
}

TEST(MappedModel, MismatchFreeMacroEqualsReference) {
  const auto t = train_synthetic(3);
  const Macro<Rational> macro(MacroConfig::ideal(t.model.macro_rows));
  const MappedModel<Rational> mm(t.model, macro);
  const auto xs = quantize_inputs(t.model, t.task.test);
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_EQ(mm.infer(xs[i]), infer_reference(t.model, xs[i])) << i;
  }
  EXPECT_EQ(macro.conversions(), 60 * t.model.outputs_per_sample());
}

TEST(MappedModel, LayerCodesMatchReferenceLayerByLayer) {
  const auto m = hand_model();
  const Macro<Rational> macro(MacroConfig::ideal(2));
  const MappedModel<Rational> mm(m, macro);
  const std::vector<int> x{100, -50};
  EXPECT_EQ(mm.layer_codes(0, x), (std::vector<int>{19, 0}));
  EXPECT_EQ(mm.layer_codes(1, std::vector<int>{19, 0}), (std::vector<int>{4, 0, 9}));
  EXPECT_EQ(infer_on_macro(m, x, macro), 2);
  const Macro<Rational> wrong_rows(MacroConfig::ideal(4));
  EXPECT_THROW((MappedModel<Rational>(m, wrong_rows)), InputError);
}

TEST(Calibrate, MismatchFreeMacroGivesIdentity) {
  const auto t = train_synthetic(3);
  const Macro<Rational> macro(MacroConfig::ideal(t.model.macro_rows));
  const MappedModel<Rational> mm(t.model, macro);
  const auto xs = quantize_inputs(t.model, t.task.train.head(64));
  const auto cal = calibrate(mm, xs);
  ASSERT_EQ(cal.size(), t.model.layers.size());
  for (const auto& c : cal) {
    EXPECT_DOUBLE_EQ(c.params.scale, 1.0);
    EXPECT_DOUBLE_EQ(c.params.offset, 0.0);
    EXPECT_EQ(c.stats.count, 64 * t.model.layers[c.layer].cols);
  }
}

TEST(Calibrate, Preconditions) {
  auto m = hand_model();
  m.layers[0].weights.assign(4, 0);  // constant hidden outputs
  const Macro<double> macro(MacroConfig::ideal(2));
  const MappedModel<double> mm(m, macro);
  const std::vector<std::vector<int>> xs(40, std::vector<int>{10, 20});
  EXPECT_THROW(calibrate(mm, xs), CalibrationError);
  const std::vector<std::vector<int>> few(31, std::vector<int>{10, 20});
  EXPECT_THROW(calibrate(mm, few), CalibrationError);
  try {
    calibrate(mm, xs);
  } catch (const CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(Synthetic, SameSeedSameHash) {
  const auto a = make_synthetic_task(5);
  const auto b = make_synthetic_task(5);
  const auto c = make_synthetic_task(6);
  EXPECT_EQ(dataset_hash(a.train), dataset_hash(b.train));
  EXPECT_EQ(dataset_hash(a.test), dataset_hash(b.test));
  EXPECT_NE(dataset_hash(a.train), dataset_hash(c.train));
  EXPECT_EQ(a.train.size(), 600U);
  EXPECT_EQ(a.test.size(), 200U);
  EXPECT_EQ(a.train.features, 16U);
}

TEST(Synthetic, SeparableTaskIsLearned) {
  SyntheticSpec spec;
  spec.center_spread = 3.0;
  spec.noise = 0.5;
  const auto t = train_synthetic(2, spec);
  EXPECT_GE(t.float_accuracy, 0.95);
  EXPECT_GE(t.quantized_accuracy, 0.95);
}

TEST(Synthetic, QuantizationCostsLittleAccuracy) {
  for (std::uint64_t seed : {1U, 4U}) {
    const auto t = train_synthetic(seed);
    EXPECT_GE(t.quantized_accuracy, 0.9);
    EXPECT_LE(t.float_accuracy - t.quantized_accuracy, 0.05) << seed;
    EXPECT_EQ(t.model.macro_rows, 16U);
  }
}

TEST(Synthetic, TrainingIsDeterministic) {
  const auto a = train_synthetic(7);
  const auto b = train_synthetic(7);
  EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
}

TEST(DatasetCsv, RoundTripsExactly) {
  const auto d = make_synthetic_task(9).test;
  std::istringstream is(dataset_csv(d));
  const auto back = read_dataset_csv(is);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.classes, d.classes);
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.y, d.y);
  EXPECT_EQ(dataset_hash(back), dataset_hash(d));
}

TEST(DatasetCsv, ErrorsNameTheLine) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream is(text);
    try {
      read_dataset_csv(is);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("", "empty");
  expect_error("a,b\n1,2\n", "line 1");
  expect_error("f0,label\n1.5,0\nabc,1\n", "line 3");
  expect_error("f0,f1,label\n1,0\n", "line 2");
  expect_error("f0,label\n1,-1\n", "line 2");
  expect_error("f0,label\n", "no samples");
}

TEST(Base64, RfcVectors) {
  auto enc = [](const std::string& s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foob"), "Zm9vYg==");
  EXPECT_EQ(enc("fooba"), "Zm9vYmE=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto d = base64_decode("Zm9vYmE=");
  EXPECT_EQ(std::string(d.begin(), d.end()), "fooba");
}

TEST(Base64, RejectsMalformedInput) {
  EXPECT_THROW(base64_decode("Zm9"), InputError);
  EXPECT_THROW(base64_decode("Zm9*"), InputError);
  EXPECT_THROW(base64_decode("Z=9v"), InputError);
  EXPECT_THROW(base64_decode("Zg==Zg=="), InputError);
}

TEST(ModelJson, RoundTrip) {
  const auto m = train_synthetic(3).model;
  const auto j = to_json(m);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("quantization").at("bits"), 8);
  const auto back = model_from_json(j);
  EXPECT_EQ(to_json(back), j);
  for (std::size_t l = 0; l < m.layers.size(); ++l) EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
}

TEST(ModelJson, NegativeWeightsSurviveEncoding) {
  const auto m = hand_model();
  const auto back = model_from_json(to_json(m));
  EXPECT_EQ(back.layers[0].weights, (std::vector<int>{64, 32, -128, 10}));
}

TEST(ModelJson, RejectsBadDocuments) {
  auto j = to_json(hand_model());
  auto extra = j;
  extra["comment"] = "x";
  EXPECT_THROW(model_from_json(extra), InputError);
  auto bits = j;
  bits["quantization"]["bits"] = 4;
  EXPECT_THROW(model_from_json(bits), InputError);
  auto shape = j;
  shape["layers"][0]["weights"] = "AAAA";
  EXPECT_THROW(model_from_json(shape), InputError);
  auto version = j;
  version["schema_version"] = 2;
  EXPECT_THROW(model_from_json(version), InputError);
}

TEST(Experiment, IdealModeEqualsReferenceAndCountsConversions) {
  const auto t = train_synthetic(3);
  NnExperimentConfig cfg;
  cfg.sigma_c = 0.01;
  cfg.seeds = {0, 1};
  cfg.calibration_samples = 64;
  const auto r = run_nn_experiment(t.model, t.task.test, t.task.train, cfg);
  ASSERT_TRUE(r.ideal.has_value());
  EXPECT_EQ(*r.ideal, r.reference);
  EXPECT_EQ(r.conversions_per_sample, t.model.outputs_per_sample());
  ASSERT_EQ(r.per_seed.size(), 2U);
  for (const auto& s : r.per_seed) {
    EXPECT_TRUE(s.distorted.has_value());
    EXPECT_TRUE(s.finetuned.has_value());
    EXPECT_EQ(s.calibration.size(), t.model.layers.size());
  }
  const auto j = to_json(r, cfg);
  for (const char* key : {"reference_accuracy", "ideal", "distorted_median", "finetuned_median", "finetuned_ge_distorted"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Experiment, MedianOfEvenAndOddSets) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), InputError);
}

}  // namespace
}  // namespace cdcim
