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
#include <fstream>
#include <random>
#include <sstream>

#include "qx/common.h"
#include "qx/dataset.h"
#include "qx/error.h"
#include "qx/model.h"
#include "qx/registry.h"

namespace qx {
namespace {

const Schema& Pima() {
  static const Schema s = Schema::Load(DefaultDataDir() / "pima.schema.json");
  return s;
}

const Dataset& PimaData() {
  static const Dataset d = Dataset::LoadCsv(DefaultDataDir() / "pima.csv", Pima());
  return d;
}

// Raw column straight from the CSV, parsed with iostreams.
std::vector<double> RawColumn(size_t col) {
  std::ifstream in(DefaultDataDir() / "pima.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (size_t c = 0; c <= col; ++c) std::getline(ss, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

TEST(DatasetTest, ImputationUsesMedianOfNonzero) {
  auto raw = RawColumn(1);  // Glucose
  std::vector<double> nz;
  for (double v : raw) {
    if (v != 0) nz.push_back(v);
  }
  std::sort(nz.begin(), nz.end());
  double med = nz.size() % 2 ? nz[nz.size() / 2]
                             : 0.5 * (nz[nz.size() / 2 - 1] + nz[nz.size() / 2]);
  const auto& d = PimaData();
  ASSERT_EQ(d.rows(), raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    EXPECT_DOUBLE_EQ(d.row(i)[1], raw[i] == 0 ? med : raw[i]);
  }
  // Pregnancies is not imputed.
  auto preg = RawColumn(0);
  for (size_t i = 0; i < preg.size(); ++i) EXPECT_DOUBLE_EQ(d.row(i)[0], preg[i]);
}

TEST(DatasetTest, LabelCounts) {
  size_t pos = 0;
  for (int y : PimaData().y()) pos += y;
  EXPECT_EQ(pos, 268u);
  EXPECT_EQ(PimaData().rows() - pos, 500u);
}

TEST(DatasetTest, MissingColumnIsSchemaMismatch) {
  try {
    Dataset::FromCsvText("Glucose,Outcome\n1,0\n2,1\n", Pima(), std::nullopt, "t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(DatasetTest, FilterExactThenClosest) {
  FeatureGroup g;
  g.Add(FeatureConstraint::Numeric("Age", ConstraintOp::kEq, 50));
  auto exact = FilterRecords(PimaData(), g);
  EXPECT_FALSE(exact.approximate);
  for (size_t i : exact.indices) EXPECT_DOUBLE_EQ(PimaData().row(i)[7], 50);

  FeatureGroup h;
  h.Add(FeatureConstraint::Numeric("Age", ConstraintOp::kEq, 45));
  h.Add(FeatureConstraint::Numeric("BMI", ConstraintOp::kEq, 27));
  h.Add(FeatureConstraint::Numeric("DiabetesPedigreeFunction", ConstraintOp::kEq, 0.2));
  auto near = FilterRecords(PimaData(), h);
  EXPECT_TRUE(near.approximate);
  EXPECT_EQ(near.indices.size(), 5u);
}

TEST(DatasetTest, InfeasibleHardConstraint) {
  FeatureGroup g;
  g.Add(FeatureConstraint::Numeric("Glucose", ConstraintOp::kGt, 1000));
  g.Add(FeatureConstraint::Numeric("Age", ConstraintOp::kEq, 30));
  EXPECT_THROW(FilterRecords(PimaData(), g), Error);
}

TEST(ModelTest, ReportFromConfusionCounts) {
  // tp 3, fn 1, fp 2, tn 4.
  std::vector<int> t = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  std::vector<int> p = {1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
  auto r = ComputeReport(t, p);
  EXPECT_EQ(r.tp, 3u);
  EXPECT_EQ(r.fp, 2u);
  EXPECT_DOUBLE_EQ(r.sensitivity, 0.75);
  EXPECT_NEAR(r.specificity, 4.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.7);
  // Support-weighted: class 1 P 0.6 R 0.75, class 0 P 0.8 R 2/3.
  double p1 = 0.6, r1 = 0.75, p0 = 0.8, r0 = 4.0 / 6.0;
  EXPECT_NEAR(r.precision, 0.4 * p1 + 0.6 * p0, 1e-12);
  EXPECT_NEAR(r.recall, 0.4 * r1 + 0.6 * r0, 1e-12);
  double f1 = 2 * p1 * r1 / (p1 + r1), f0 = 2 * p0 * r0 / (p0 + r0);
  EXPECT_NEAR(r.f1, 0.4 * f1 + 0.6 * f0, 1e-12);
}

TEST(ModelTest, SplitIsSeededPartition) {
  auto [a, b] = TrainTestSplit(100, 0.2, 9);
  auto [c, d] = TrainTestSplit(100, 0.2, 9);
  EXPECT_EQ(a, c);
  EXPECT_EQ(b, d);
  EXPECT_EQ(b.size(), 20u);
  std::vector<size_t> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (size_t i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
}

TEST(ModelTest, LogisticConverges) {
  auto m = Train(PimaData(), ModelKind::kLogisticRegression, {});
  EXPECT_TRUE(m.converged);
  EXPECT_LT(m.final_grad_norm, 1e-6);
  EXPECT_EQ(m.n_train + m.n_test, 768u);
}

TEST(ModelTest, LogisticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  Matrix xs;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    xs.push_back({n(rng), n(rng), n(rng)});
    y.push_back(n(rng) > 0 ? 1 : 0);
  }
  std::vector<double> params = {0.3, -0.7, 1.1, 0.2};
  auto g = LogisticRegression::Gradient(xs, y, params);
  const double h = 1e-6;
  for (size_t k = 0; k < params.size(); ++k) {
    auto up = params, down = params;
    up[k] += h;
    down[k] -= h;
    double fd = (LogisticRegression::Loss(xs, y, up) - LogisticRegression::Loss(xs, y, down)) /
                (2 * h);
    EXPECT_NEAR(fd, g[k], 1e-7);
  }
}

TEST(ModelTest, TrainingIsDeterministic) {
  for (auto kind : {ModelKind::kLogisticRegression, ModelKind::kDecisionTree,
                    ModelKind::kRandomForest}) {
    auto a = Train(PimaData(), kind, {});
    auto b = Train(PimaData(), kind, {});
    EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump()) << ModelKindName(kind);
  }
}

TEST(ModelTest, SaveLoadRoundTrip) {
  auto m = Train(PimaData(), ModelKind::kDecisionTree, {});
  auto path = std::filesystem::temp_directory_path() / "qx_model_roundtrip.json";
  m.Save(path);
  auto n = TrainedModel::Load(path);
  EXPECT_EQ(n.Id(), m.Id());
  for (size_t i = 0; i < PimaData().rows(); i += 37) {
    EXPECT_DOUBLE_EQ(n.Proba(PimaData().row(i)), m.Proba(PimaData().row(i)));
  }
}

TEST(ModelTest, TreeSeparatesSeparableData) {
  Matrix x;
  std::vector<int> y;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    x.push_back({a, b});
    y.push_back(a > 0.6 ? 1 : 0);
  }
  std::vector<size_t> rows(x.size());
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  auto t = DecisionTree::Fit(x, y, rows, {3, 1, 0}, nullptr);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(t.Proba(x[i]) >= 0.5 ? 1 : 0, y[i]);
  EXPECT_EQ(t.nodes()[0].feature, 0);
}

TEST(ModelTest, SingleClassRejected) {
  Matrix x = {{1}, {2}, {3}, {4}, {5}};
  Schema s = Schema::FromJson(nlohmann::json::parse(R"({
    "name": "t", "target": {"column": "y", "label": "Y", "positive": "Y", "negative": "N"},
    "features": [{"name": "a", "type": "numeric"}]})"));
  auto d = Dataset::FromMatrix(s, x, {1, 1, 1, 1, 1});
  try {
    Train(d, ModelKind::kLogisticRegression, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClassData);
  }
}

}  // namespace
}  // namespace qx
