// Copyright 2026 The qxplain Authors.
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

#include <cmath>
#include <random>

#include "qx/error.h"
#include "qx/metrics.h"
#include "qx/rules.h"

namespace qx {
namespace {

TEST(MetricsTest, PearsonAndSpearmanHandValues) {
  std::vector<double> a = {1, 2, 3, 4}, b = {2, 4, 6, 8.5};
  EXPECT_NEAR(PearsonCorrelation(a, a), 1.0, 1e-12);
  std::vector<double> r = {4, 3, 2, 1};
  EXPECT_NEAR(PearsonCorrelation(a, r), -1.0, 1e-12);
  EXPECT_NEAR(SpearmanCorrelation(a, b), 1.0, 1e-12);
  EXPECT_EQ(AverageRanks(std::vector<double>{10, 20, 20, 5}),
            (std::vector<double>{2, 3.5, 3.5, 1}));
  std::vector<double> flat = {3, 3, 3, 3};
  EXPECT_THROW(PearsonCorrelation(a, flat), Error);
}

TEST(MetricsTest, FaithfulnessOnAdditiveModel) {
  std::vector<double> w = {0.5, 2.0, -1.0, 3.0};
  ModelFn f = [&](std::span<const double> x) {
    double s = 0;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
  };
  std::vector<double> x = {1, 2, 3, 4}, ref = {0, 0, 0, 0};
  // Exact attributions of an additive model: w_i (x_i - ref_i).
  std::vector<double> phi = {0.5, 4.0, -3.0, 12.0};
  EXPECT_NEAR(Faithfulness(f, x, phi, ref), 1.0, 1e-12);
  std::vector<double> neg = {-0.5, -4.0, 3.0, -12.0};
  EXPECT_NEAR(Faithfulness(f, x, neg, ref), -1.0, 1e-12);
}

TEST(MetricsTest, MonotonicityRanks) {
  std::vector<double> phi = {0.1, -0.5, 0.3}, e = {1, 9, 4};
  EXPECT_NEAR(Monotonicity(phi, e), 1.0, 1e-12);
  std::vector<double> rev = {9, 1, 4};
  EXPECT_NEAR(Monotonicity(phi, rev), -1.0, 1e-12);
}

TEST(MetricsTest, DiversityAndNonRepresentativeness) {
  EXPECT_DOUBLE_EQ(Diversity({{0, 0}, {3, 4}}), 5.0);
  EXPECT_NEAR(Diversity({{0, 0}, {3, 4}, {0, 4}}), (5.0 + 4.0 + 3.0) / 3.0, 1e-12);
  EXPECT_THROW(Diversity({{1, 1}}), Error);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  Matrix x(30, Row(3));
  for (auto& r : x) {
    for (double& v : r) v = g(rng);
  }
  EXPECT_LE(NonRepresentativeness(x, x, 1.0), 1e-10);
  Matrix far = x;
  for (auto& r : far) r[0] += 10;
  EXPECT_GT(NonRepresentativeness(far, x, 1.0), 0.5);
  EXPECT_THROW(NonRepresentativeness(x, x, 0.0), Error);
}

TEST(MetricsTest, FidelityFirstCoveringRuleByCoverage) {
  Rule lo, hi;
  lo.antecedents = {FeatureConstraint::Range("a", -INFINITY, 5)};
  lo.columns = {0};
  lo.label = 0;
  lo.coverage = 10;
  hi.antecedents = {FeatureConstraint::Range("a", 3, INFINITY)};
  hi.columns = {0};
  hi.label = 1;
  hi.coverage = 20;  // consulted first
  RuleSet rs{{lo, hi}, {"a"}};
  Matrix rows = {{1}, {4}, {6}};
  // 1 -> lo (0), 4 -> hi (1), 6 -> hi (1).
  EXPECT_NEAR(Fidelity(rs, rows, {0, 1, 1}), 1.0, 1e-12);
  EXPECT_NEAR(Fidelity(rs, rows, {0, 0, 1}), 2.0 / 3.0, 1e-12);
  RuleSet partial{{lo}, {"a"}};
  EXPECT_NEAR(Fidelity(partial, rows, {0, 0, 0}), 2.0 / 3.0, 1e-12);  // abstains on 6
  EXPECT_EQ(Fidelity(RuleSet{{}, {"a"}}, rows, {0, 0, 0}), 0.0);
}

TEST(MetricsTest, AverageRuleLength) {
  Rule one, two;
  one.antecedents = {FeatureConstraint::Range("a", 0, 1)};
  two.antecedents = {FeatureConstraint::Range("a", 0, 1), FeatureConstraint::Range("b", 0, 1)};
  EXPECT_DOUBLE_EQ(AverageRuleLength({one, two, two, one}), 1.5);
  EXPECT_THROW(AverageRuleLength({}), Error);
}

TEST(MetricsTest, ReportJsonRoundTrip) {
  MetricReport r;
  r.metric = "faithfulness";
  r.value = 0.25;
  r.explainer = "shap";
  r.instances = 3;
  EXPECT_EQ(MetricReport::FromJson(r.ToJson()).ToJson(), r.ToJson());
  r.value.reset();
  r.note = "zero variance";
  EXPECT_TRUE(MetricReport::FromJson(r.ToJson()).ToJson()["value"].is_null());
}

}  // namespace
}  // namespace qx
