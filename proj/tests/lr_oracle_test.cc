// Copyright 2026 The rsmc Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include "lr_oracle.hpp"
#include "rsmc/dataio.hpp"

namespace rsmc::testing {
namespace {

SynthSpec gate_spec() {
  SynthSpec s;
  s.subjects = 6;
  s.classes = 3;
  s.per_subject = 200;
  s.window = 10;
  s.snr = 1.0;
  s.shift = 2.5;
  s.seed = 3;
  return s;
}

TEST(LrOracle, SeparableDataIsPerfect) {
  SynthSpec s;
  s.subjects = 3;
  s.per_subject = 30;
  s.window = 2;
  s.snr = 1e6;
  s.shift = 0.0;
  const auto r = lr_oracle_loso(synthesize(s));
  ASSERT_EQ(r.fold_accuracy.size(), 3u);
  EXPECT_EQ(r.mean, 100.0);
}

TEST(LrOracle, InvariantToGlobalFeatureScale) {
  SynthSpec s = gate_spec();
  s.subjects = 3;
  s.per_subject = 45;
  Dataset d = synthesize(s);
  const auto base = lr_oracle_loso(d);
  for (auto& v : d.samples.values) v *= 4.0f;
  const auto scaled = lr_oracle_loso(d);
  EXPECT_EQ(base.fold_accuracy, scaled.fold_accuracy);
}

// Reference values from an independent solver (scikit-learn
// LogisticRegression, C=1, lbfgs, tol 1e-10) on the same features and
// per-fold standardisation.
TEST(LrOracle, MatchesReferenceSolverOnGateData) {
  const auto r = lr_oracle_loso(synthesize(gate_spec()));
  const std::vector<double> expected = {89.5, 93.5, 53.5, 48.0, 67.0, 55.5};
  ASSERT_EQ(r.fold_accuracy.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(r.fold_accuracy[i], expected[i], 1e-9) << i;
  EXPECT_NEAR(r.mean, 67.8333333333, 1e-6);
}

}  // namespace
}  // namespace rsmc::testing
