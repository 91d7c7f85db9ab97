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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qx/counterfactual.h"
#include "qx/dataset.h"
#include "qx/error.h"
#include "qx/metrics.h"
#include "qx/model.h"
#include "qx/protodash.h"
#include "qx/registry.h"
#include "qx/rules.h"
#include "qx/shapley.h"
#include "qx/summary.h"

namespace qx {
namespace {

const Dataset& PimaData() {
  static const Dataset d = Dataset::LoadCsv(
      DefaultDataDir() / "pima.csv", Schema::Load(DefaultDataDir() / "pima.schema.json"));
  return d;
}

// Shapley values by averaging marginal contributions over all d!
// orderings, with its own median baseline.
std::vector<double> PermutationOracle(const ModelFn& f, const Row& x, const Matrix& bg) {
  const size_t d = x.size();
  Row med(d);
  for (size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& r : bg) col.push_back(r[j]);
    std::sort(col.begin(), col.end());
    size_t n = col.size();
    med[j] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(d, 0.0);
  size_t count = 0;
  do {
    Row z = med;
    double prev = f(z);
    for (size_t j : order) {
      z[j] = x[j];
      double cur = f(z);
      phi[j] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : phi) p /= static_cast<double>(count);
  return phi;
}

Matrix RandomMatrix(size_t n, size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  Matrix m(n, Row(d));
  for (auto& r : m) {
    for (double& v : r) v = g(rng);
  }
  return m;
}

TEST(ShapleyTest, ExactMatchesPermutationOracle) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0, 1);
  for (size_t d = 1; d <= 6; ++d) {
    std::vector<double> a(d), b(d * d);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = g(rng);
    ModelFn f = [&](std::span<const double> x) {
      double s = 0;
      for (size_t i = 0; i < d; ++i) {
        s += a[i] * x[i];
        for (size_t j = i + 1; j < d; ++j) s += b[i * d + j] * x[i] * x[j];
      }
      return std::tanh(s);
    };
    Matrix bg = RandomMatrix(31, d, rng);
    Row x = RandomMatrix(1, d, rng)[0];
    auto got = ShapleyAttribution(f, x, bg);
    auto want = PermutationOracle(f, x, bg);
    for (size_t j = 0; j < d; ++j) EXPECT_NEAR(got.phi[j], want[j], 1e-10) << "d=" << d;
    double sum = std::accumulate(got.phi.begin(), got.phi.end(), 0.0);
    EXPECT_NEAR(sum, got.prediction - got.baseline, 1e-10);
  }
}

TEST(ShapleyTest, DummyAndSymmetry) {
  // f ignores x2; x0 and x1 enter symmetrically.
  ModelFn f = [](std::span<const double> x) { return x[0] * x[1] + x[0] + x[1]; };
  Matrix bg = {{0, 0, 0}, {0, 0, 5}, {0, 0, -5}};
  auto r = ShapleyAttribution(f, Row{2, 2, 9}, bg);
  EXPECT_NEAR(r.phi[2], 0.0, 1e-12);
  EXPECT_NEAR(r.phi[0], r.phi[1], 1e-12);
  EXPECT_NEAR(r.phi[0], 4.0, 1e-12);  // (x0*x1)/2 + x0
}

TEST(ShapleyTest, SampledConvergesToExact) {
  std::mt19937_64 rng(2);
  ModelFn f = [](std::span<const double> x) { return std::sin(x[0]) + x[1] * x[2] - x[3]; };
  Matrix bg = RandomMatrix(20, 4, rng);
  Row x = {1.0, 0.5, -1.5, 2.0};
  auto exact = ShapleyAttribution(f, x, bg);
  ShapleyConfig cfg;
  cfg.mode = ShapleyMode::kSampled;
  cfg.permutations = 4000;
  cfg.seed = 1;
  auto sampled = ShapleyAttribution(f, x, bg, cfg);
  for (size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(sampled.phi[j], exact.phi[j], 5 * sampled.std_error[j] + 1e-9);
  }
  EXPECT_EQ(ShapleyAttribution(f, x, bg, cfg).phi, sampled.phi);
}

TEST(ShapleyTest, Errors) {
  ModelFn f = [](std::span<const double>) { return 0.0; };
  EXPECT_THROW(ShapleyAttribution(f, Row{1, 2}, Matrix{}), Error);
  Row wide(kMaxExactFeatures + 1, 0.0);
  EXPECT_THROW(ShapleyAttribution(f, wide, Matrix{wide}), Error);
}

TEST(ProtodashTest, FirstPickMaximizesMeanKernel) {
  std::mt19937_64 rng(4);
  Matrix x = RandomMatrix(40, 3, rng);
  Matrix y = RandomMatrix(10, 3, rng);
  auto p = ProtodashSelect(x, y, 1, 1.0);
  // With K_jj = 1 a single prototype j scores mu_j^2 / 2.
  size_t best = 0;
  double best_mu = -1;
  for (size_t j = 0; j < x.size(); ++j) {
    double mu = 0;
    for (const auto& r : y) mu += RbfKernel(x[j], r, 1.0);
    mu /= y.size();
    if (mu > best_mu) {
      best_mu = mu;
      best = j;
    }
  }
  ASSERT_EQ(p.indices.size(), 1u);
  EXPECT_EQ(p.indices[0], best);
  EXPECT_NEAR(p.weights[0], best_mu, 1e-9);
}

TEST(ProtodashTest, WeightsSatisfyKktAndTraceIncreases) {
  std::mt19937_64 rng(8);
  Matrix x = RandomMatrix(60, 4, rng);
  Matrix y(x.begin(), x.begin() + 15);
  auto p = ProtodashSelect(x, y, 5);
  ASSERT_EQ(p.indices.size(), 5u);
  for (size_t k = 1; k < p.objective_trace.size(); ++k) {
    EXPECT_GE(p.objective_trace[k], p.objective_trace[k - 1] - 1e-12);
  }
  // Gradient of wᵀμ − ½wᵀKw on the support: zero where w > 0, <= 0 where w = 0.
  for (size_t a = 0; a < p.indices.size(); ++a) {
    double mu = 0;
    for (const auto& r : y) mu += RbfKernel(x[p.indices[a]], r, p.bandwidth);
    mu /= y.size();
    double g = mu;
    for (size_t b = 0; b < p.indices.size(); ++b) {
      g -= RbfKernel(x[p.indices[a]], x[p.indices[b]], p.bandwidth) * p.weights[b];
    }
    EXPECT_GE(p.weights[a], 0.0);
    if (p.weights[a] > 1e-9) {
      EXPECT_NEAR(g, 0.0, 1e-6);
    } else {
      EXPECT_LE(g, 1e-6);
    }
  }
  EXPECT_NEAR(ProtodashObjective(x, y, p.indices, p.weights, p.bandwidth),
              p.objective_trace.back(), 1e-12);
}

TEST(ProtodashTest, Errors) {
  Matrix same(5, Row{1, 1});
  EXPECT_THROW(ProtodashSelect(same, same, 2), Error);  // zero median distance
  EXPECT_THROW(ProtodashSelect(same, same, 9, 1.0), Error);
  EXPECT_TRUE(ProtodashSelect(same, same, 0, 1.0).indices.empty());
}

TEST(RulesTest, TreeRulesPartitionTrainingData) {
  auto m = Train(PimaData(), ModelKind::kDecisionTree, {});
  auto rs = ExtractRules(m, PimaData().x());
  size_t leaves = 0;
  for (const auto& n : m.tree.nodes()) leaves += n.leaf();
  EXPECT_EQ(rs.rules.size(), leaves);
  size_t total = 0;
  for (const auto& r : rs.rules) total += r.coverage;
  EXPECT_EQ(total, PimaData().rows());
  // Exactly one rule covers each row, and it agrees with the tree.
  for (const auto& row : PimaData().x()) {
    size_t covering = 0;
    for (const auto& r : rs.rules) {
      if (r.Covers(row)) {
        ++covering;
        EXPECT_EQ(r.label, m.Predict(row).first);
      }
    }
    EXPECT_EQ(covering, 1u);
  }
  EXPECT_DOUBLE_EQ(Fidelity(rs, PimaData().x(), m.PredictBatch(PimaData().x())), 1.0);
}

TEST(RulesTest, SimplifyMergesBoundsOnOneFeature) {
  // Root and child both split feature 0.
  std::vector<TreeNode> nodes(5);
  nodes[0] = {0, 10.0, 1, 2, 10, 5};
  nodes[1] = {0, 5.0, 3, 4, 6, 3};
  nodes[2] = {-1, 0, -1, -1, 4, 4};
  nodes[3] = {-1, 0, -1, -1, 3, 0};
  nodes[4] = {-1, 0, -1, -1, 3, 3};
  DecisionTree t(nodes);
  auto rs = ExtractTreeRules(t, {"Glucose"}, Matrix{{1}, {7}, {12}});
  ASSERT_EQ(rs.rules.size(), 3u);
  const auto& mid = rs.rules[1];  // 5 <= x < 10
  ASSERT_EQ(mid.antecedents.size(), 1u);
  EXPECT_DOUBLE_EQ(mid.antecedents[0].lower, 5.0);
  EXPECT_DOUBLE_EQ(mid.antecedents[0].upper, 10.0);
  auto raw = ExtractTreeRules(t, {"Glucose"}, Matrix{{1}}, false);
  EXPECT_EQ(raw.rules[1].antecedents.size(), 2u);
  EXPECT_EQ(raw.rules[1].length(), 1u);
}

TEST(RulesTest, TextRoundTrip) {
  auto m = Train(PimaData(), ModelKind::kDecisionTree, {});
  for (const auto& r : ExtractRules(m, PimaData().x()).rules) {
    auto back = ParseRule(RuleToString(r), PimaData().schema());
    EXPECT_EQ(back.antecedents, r.antecedents);
    EXPECT_EQ(back.columns, r.columns);
    EXPECT_EQ(back.label, r.label);
  }
}

TEST(RulesTest, LogisticRegressionHasNoTree) {
  auto m = Train(PimaData(), ModelKind::kLogisticRegression, {});
  EXPECT_THROW(ExtractRules(m, PimaData().x()), Error);
}

TEST(CounterfactualTest, FlipsWithinBoundsAndKeepsImmutables) {
  auto m = Train(PimaData(), ModelKind::kLogisticRegression, {});
  auto space = FeatureSpace::FromDataset(PimaData());
  ModelFn f = [&](std::span<const double> x) { return m.Proba(x); };
  for (size_t i : {0u, 1u, 2u, 100u}) {
    const Row& x = PimaData().row(i);
    auto set = CounterfactualSearch(f, x, space);
    ASSERT_FALSE(set.items.empty());
    for (size_t k = 0; k < set.items.size(); ++k) {
      const auto& cf = set.items[k];
      EXPECT_NE(cf.label, set.original_label);
      EXPECT_EQ(m.Predict(cf.values).first, cf.label);
      for (size_t j = 0; j < space.size(); ++j) {
        EXPECT_GE(cf.values[j], space.lower[j]);
        EXPECT_LE(cf.values[j], space.upper[j]);
        if (space.immutable[j]) {
          EXPECT_EQ(cf.values[j], x[j]);
        }
      }
      if (k) {
        EXPECT_LE(set.items[k - 1].proximity, cf.proximity);
      }
    }
    auto again = CounterfactualSearch(f, x, space);
    EXPECT_EQ(again.items.size(), set.items.size());
    EXPECT_EQ(again.items[0].values, set.items[0].values);
  }
}

TEST(CounterfactualTest, AllImmutableFindsNothing) {
  auto m = Train(PimaData(), ModelKind::kLogisticRegression, {});
  auto space = FeatureSpace::FromDataset(PimaData(), PimaData().feature_names());
  ModelFn f = [&](std::span<const double> x) { return m.Proba(x); };
  try {
    CounterfactualSearch(f, PimaData().row(0), space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCounterfactualFound);
  }
}

TEST(SummaryTest, MatchesNaiveStatistics) {
  std::vector<size_t> rows = {0, 5, 9, 200, 701};
  auto s = Summarize(PimaData(), rows);
  EXPECT_EQ(s.count, 5u);
  for (size_t j = 0; j < PimaData().dims(); ++j) {
    double sum = 0, mn = 1e300, mx = -1e300;
    for (size_t i : rows) {
      sum += PimaData().row(i)[j];
      mn = std::min(mn, PimaData().row(i)[j]);
      mx = std::max(mx, PimaData().row(i)[j]);
    }
    double mean = sum / 5, ss = 0;
    for (size_t i : rows) ss += std::pow(PimaData().row(i)[j] - mean, 2);
    EXPECT_NEAR(*s.features[j].mean, mean, 1e-9);
    EXPECT_NEAR(*s.features[j].sd, std::sqrt(ss / 4), 1e-9);
    EXPECT_EQ(*s.features[j].min, mn);
    EXPECT_EQ(*s.features[j].max, mx);
  }
  auto empty = Summarize(PimaData(), {});
  EXPECT_EQ(empty.count, 0u);
  EXPECT_FALSE(empty.features[0].mean.has_value());
}

}  // namespace
}  // namespace qx
