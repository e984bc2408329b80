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

#include "cdcim/macro.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

namespace cdcim {
namespace {

TEST(LoadWeights, Examples) {
  const Macro<Rational> m(MacroConfig::ideal());
  EXPECT_EQ(m.load_weights(std::vector<int>{}).size(), 0U);
  const auto s = m.load_weights(std::vector<int>{5});
  ASSERT_EQ(s.size(), 1U);
  EXPECT_EQ(decode(s.word(0)), 5);
  EXPECT_THROW(m.load_weights(std::vector<int>(1153, 1)), CapacityError);
  EXPECT_THROW(m.load_weights(std::vector<int>{200}), RangeError);
}

TEST(LoadWeights, Idempotent) {
  const Macro<double> m(MacroConfig::ideal(64));
  const std::vector<int> w{1, -2, 3, 127, -128};
  const auto a = m.load_weights(w);
  const auto b = m.load_weights(a.values);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.words.digits, b.words.digits);
}

TEST(MacRelu, Examples) {
  const Macro<Rational> m(MacroConfig::ideal());
  const std::vector<int> a{3, -5};
  const auto neg = m.mac_relu(a, m.load_weights(std::vector<int>{2, 4}));
  EXPECT_EQ(neg, (AdcResult{0, 1, true}));

  const std::vector<int> full(1152, 127);
  EXPECT_EQ(m.mac_relu(full, m.load_weights(full)).code, 126);

  const std::vector<int> zeros(10, 0);
  EXPECT_EQ(m.mac_relu(zeros, m.load_weights(std::vector<int>(10, 9))), (AdcResult{0, 8, false}));
}

TEST(MacRelu, LengthMismatchThrows) {
  const Macro<double> m(MacroConfig::ideal());
  const std::vector<int> a{1, 2};
  EXPECT_THROW(m.mac_relu(a, m.load_weights(std::vector<int>{1})), LengthError);
}

TEST(Reference, Examples) {
  const std::vector<int> a{3, -5}, w{2, 4};
  EXPECT_EQ(reference_mac_relu(a, w, 1152), 0);
  EXPECT_EQ(reference_mac(a, w, 1152), 0);
  const std::vector<int> full(1152, 127);
  EXPECT_EQ(reference_mac_relu(full, full, 1152), 126);
  const std::vector<int> one{1};
  EXPECT_EQ(reference_mac_relu(one, one, 1152), 0);
  // Exactly half an LSB rounds away from zero in both directions.
  const std::vector<int> h{64}, hp{1}, hn{-1};
  EXPECT_EQ(reference_mac(h, hp, 1), 1);
  EXPECT_EQ(reference_mac(h, hn, 1), -1);
}

TEST(MacRelu, MatchesReferenceOnRandomVectors) {
  const Macro<Rational> m(MacroConfig::ideal());
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> val(-128, 127);
  std::uniform_int_distribution<std::size_t> len(1, 1152);
  for (int t = 0; t < 60; ++t) {
    std::vector<int> a(len(rng)), w(a.size());
    // Large same-sign runs push results away from zero.
    const bool bias = t % 3 == 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = val(rng);
      w[i] = bias ? (a[i] >= 0 ? 100 : -100) : val(rng);
    }
    const auto state = m.load_weights(w);
    EXPECT_EQ(m.mac_relu(a, state).code, reference_mac_relu(a, w, 1152));
    EXPECT_EQ(m.mac(a, state).code, reference_mac(a, w, 1152));
  }
}

TEST(MacRelu, SmallMacroSignedRangeMatchesReference) {
  const Macro<Rational> m(MacroConfig::ideal(4));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> val(-128, 127);
  int nonzero = 0;
  for (int t = 0; t < 300; ++t) {
    std::vector<int> a(4), w(4);
    for (auto& x : a) x = val(rng);
    for (auto& x : w) x = val(rng);
    const auto s = m.load_weights(w);
    const int ref = reference_mac(a, w, 4);
    nonzero += ref != 0;
    EXPECT_EQ(m.mac(a, s).code, ref);
    EXPECT_EQ(m.mac_relu(a, s).code, std::max(0, ref));
  }
  EXPECT_GT(nonzero, 200);
}

TEST(MacRelu, OneConversionPerCall) {
  const Macro<double> m(MacroConfig::ideal(8));
  const std::vector<int> a{1, 2, 3}, w{-4, 5, 6};
  const auto s = m.load_weights(w);
  EXPECT_EQ(m.conversions(), 0U);
  for (int i = 0; i < 7; ++i) m.mac_relu(a, s);
  m.mac(a, s);
  EXPECT_EQ(m.conversions(), 8U);
}

TEST(MacRelu, DeterministicUnderMismatch) {
  const auto cfg = MacroConfig::with_mismatch(32, MismatchSpec::uniform(0.02), 17);
  const Macro<double> m1(cfg);
  const Macro<double> m2(MacroConfig::with_mismatch(32, MismatchSpec::uniform(0.02), 17));
  EXPECT_FALSE(cfg.mismatch_free());
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> val(-128, 127);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> a(32), w(32);
    for (auto& x : a) x = val(rng);
    for (auto& x : w) x = val(rng);
    const auto r1 = m1.mac_relu(a, m1.load_weights(w));
    const auto r2 = m2.mac_relu(a, m2.load_weights(w));
    EXPECT_EQ(r1, r2);
    EXPECT_GE(r1.code, 0);
    EXPECT_LE(r1.code, 127);
    EXPECT_EQ(m1.analog_mac(a, m1.load_weights(w)), m2.analog_mac(a, m2.load_weights(w)));
  }
}

TEST(MacroConfig, MismatchDrawsAreIndependentPerNetwork) {
  const auto cfg = MacroConfig::with_mismatch(16, MismatchSpec::uniform(0.01), 3);
  EXPECT_NE(dump_network(cfg.leaves[0]), dump_network(cfg.leaves[1]));
  EXPECT_TRUE(MacroConfig::ideal().mismatch_free());
  const auto parasitic = MacroConfig::with_mismatch(16, MismatchSpec{}, 3, 1.0);
  EXPECT_TRUE(parasitic.mismatch_free());
  EXPECT_GT(parasitic.leaves[0].total_capacitance(), build_caat_leaf().total_capacitance());
}

TEST(MacroConfig, Validation) {
  auto cfg = MacroConfig::ideal();
  cfg.rows = 0;
  EXPECT_THROW(cfg.validate(), ConstructionError);
  cfg = MacroConfig::ideal();
  cfg.leaves.pop_back();
  EXPECT_THROW(Macro<double>{cfg}, ConstructionError);
}

}  // namespace
}  // namespace cdcim
