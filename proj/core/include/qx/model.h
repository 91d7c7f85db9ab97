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

#ifndef QX_MODEL_H_
#define QX_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qx/dataset.h"

namespace qx {

enum class ModelKind { kLogisticRegression, kDecisionTree, kRandomForest };

std::string_view ModelKindName(ModelKind k);
// Accepts lr / dt / rf and the long names.
std::optional<ModelKind> ModelKindFromName(std::string_view name);

struct TrainConfig {
  double test_fraction = 0.2;
  uint64_t seed = 42;
  bool stratify = true;  // split each class separately
  // Logistic regression.
  size_t max_iters = 200000;
  double grad_tol = 1e-6;
  // Trees.
  int max_depth = 4;
  size_t min_leaf = 5;
  // Forest.
  size_t n_trees = 50;
  int forest_max_depth = 8;
  size_t forest_min_leaf = 1;

  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

// Binary confusion counts plus derived scores. precision/recall/f1 are
// support-weighted over both classes; sensitivity and specificity are the
// recalls of the positive and negative class.
struct ModelReport {
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  double sensitivity = 0, specificity = 0;

  nlohmann::json ToJson() const;
  static ModelReport FromJson(const nlohmann::json& j);
};

ModelReport ComputeReport(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // x < threshold
  int right = -1;  // x >= threshold
  size_t n = 0;
  size_t n_pos = 0;

  bool leaf() const { return feature < 0; }
  double p1() const { return n ? static_cast<double>(n_pos) / n : 0.5; }
};

struct TreeParams {
  int max_depth = 4;
  size_t min_leaf = 5;
  size_t max_features = 0;  // 0 = all features at every split
};

// CART with Gini impurity; thresholds are midpoints of adjacent distinct
// values. Node 0 is the root.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // `rng` is only consulted when params.max_features > 0.
  static DecisionTree Fit(const Matrix& x, const std::vector<int>& y,
                          const std::vector<size_t>& rows,
                          const TreeParams& params, std::mt19937_64* rng);

  double Proba(std::span<const double> x) const;
  size_t LeafIndex(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

  nlohmann::json ToJson() const;
  static DecisionTree FromJson(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
};

// Logistic regression on z-scored inputs. Weights live in standardized
// space; the last entry of `params` in the loss helpers is the bias.
class LogisticRegression {
 public:
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> scale;

  double Proba(std::span<const double> x) const;

  // Mean log-loss and its gradient over standardized rows `xs`.
  static double Loss(const Matrix& xs, const std::vector<int>& y,
                     std::span<const double> params);
  static std::vector<double> Gradient(const Matrix& xs, const std::vector<int>& y,
                                      std::span<const double> params);
};

class TrainedModel {
 public:
  ModelKind kind = ModelKind::kLogisticRegression;
  std::vector<std::string> features;
  TrainConfig config;
  ModelReport report;
  std::string dataset_hash;
  size_t n_train = 0, n_test = 0;
  // Logistic-regression convergence.
  bool converged = true;
  size_t iterations = 0;
  double final_grad_norm = 0.0;

  LogisticRegression lr;
  DecisionTree tree;
  std::vector<DecisionTree> forest;

  double Proba(std::span<const double> x) const;
  // Label is probability >= 0.5.
  std::pair<int, double> Predict(std::span<const double> x) const;
  std::vector<int> PredictBatch(const Matrix& x) const;

  bool is_tree() const { return kind == ModelKind::kDecisionTree; }

  nlohmann::json ToJson() const;  // versioned, no timestamps
  static TrainedModel FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static TrainedModel Load(const std::filesystem::path& path);
  // Content hash of the JSON document.
  std::string Id() const;
};

// Seeded shuffle; the first round(test_fraction * n) indices form the test
// split.
std::pair<std::vector<size_t>, std::vector<size_t>> TrainTestSplit(
    size_t n, double test_fraction, uint64_t seed);

// Same, applied within each label class so both splits keep the class ratio.
std::pair<std::vector<size_t>, std::vector<size_t>> StratifiedTrainTestSplit(
    const std::vector<int>& y, double test_fraction, uint64_t seed);

// Throws SingleClassData when the training split holds one class only.
TrainedModel Train(const Dataset& data, ModelKind kind, const TrainConfig& config);

// Logistic regression fitted on all rows of (x, y); no held-out report.
LogisticRegression FitLogistic(const Matrix& x, const std::vector<int>& y,
                               size_t max_iters, double grad_tol,
                               size_t* iterations = nullptr,
                               double* grad_norm = nullptr);

}  // namespace qx

#endif  // QX_MODEL_H_
