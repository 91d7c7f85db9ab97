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

#include "qx/model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

namespace {

constexpr int kModelFormatVersion = 1;

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string_view ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kLogisticRegression: return "LogisticRegression";
    case ModelKind::kDecisionTree: return "DecisionTree";
    case ModelKind::kRandomForest: return "RandomForest";
  }
  return "LogisticRegression";
}

std::optional<ModelKind> ModelKindFromName(std::string_view name) {
  std::string k = AliasKey(name);
  if (k == "lr" || k == "logisticregression" || k == "logistic") {
    return ModelKind::kLogisticRegression;
  }
  if (k == "dt" || k == "tree" || k == "decisiontree") {
    return ModelKind::kDecisionTree;
  }
  if (k == "rf" || k == "forest" || k == "randomforest") {
    return ModelKind::kRandomForest;
  }
  return std::nullopt;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"test_fraction", test_fraction},   {"seed", seed},
          {"stratify", stratify},
          {"max_iters", max_iters},           {"grad_tol", grad_tol},
          {"max_depth", max_depth},           {"min_leaf", min_leaf},
          {"n_trees", n_trees},               {"forest_max_depth", forest_max_depth},
          {"forest_min_leaf", forest_min_leaf}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.seed = j.value("seed", c.seed);
  c.stratify = j.value("stratify", c.stratify);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_leaf = j.value("min_leaf", c.min_leaf);
  c.n_trees = j.value("n_trees", c.n_trees);
  c.forest_max_depth = j.value("forest_max_depth", c.forest_max_depth);
  c.forest_min_leaf = j.value("forest_min_leaf", c.forest_min_leaf);
  return c;
}

ModelReport ComputeReport(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label vectors differ in length");
  }
  ModelReport r;
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? r.tp : r.fn)++;
    } else {
      (y_pred[i] == 1 ? r.fp : r.tn)++;
    }
  }
  auto ratio = [](size_t a, size_t b) {
    return b ? static_cast<double>(a) / b : 0.0;
  };
  auto f1 = [](double p, double q) { return p + q > 0 ? 2 * p * q / (p + q) : 0.0; };
  double n = static_cast<double>(y_true.size());
  double prec_pos = ratio(r.tp, r.tp + r.fp);
  double prec_neg = ratio(r.tn, r.tn + r.fn);
  r.sensitivity = ratio(r.tp, r.tp + r.fn);
  r.specificity = ratio(r.tn, r.tn + r.fp);
  double w_pos = n > 0 ? (r.tp + r.fn) / n : 0.0;
  double w_neg = n > 0 ? (r.tn + r.fp) / n : 0.0;
  r.precision = w_pos * prec_pos + w_neg * prec_neg;
  r.recall = w_pos * r.sensitivity + w_neg * r.specificity;
  r.f1 = w_pos * f1(prec_pos, r.sensitivity) + w_neg * f1(prec_neg, r.specificity);
  r.accuracy = ratio(r.tp + r.tn, y_true.size());
  return r;
}

nlohmann::json ModelReport::ToJson() const {
  return {{"tp", tp},
          {"fp", fp},
          {"tn", tn},
          {"fn", fn},
          {"accuracy", accuracy},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"sensitivity", sensitivity},
          {"specificity", specificity}};
}

ModelReport ModelReport::FromJson(const nlohmann::json& j) {
  ModelReport r;
  r.tp = j.at("tp");
  r.fp = j.at("fp");
  r.tn = j.at("tn");
  r.fn = j.at("fn");
  r.accuracy = j.at("accuracy");
  r.precision = j.at("precision");
  r.recall = j.at("recall");
  r.f1 = j.at("f1");
  r.sensitivity = j.at("sensitivity");
  r.specificity = j.at("specificity");
  return r;
}

// ---------------------------------------------------------------------------
// Decision tree

namespace {

double Gini(size_t n, size_t pos) {
  if (n == 0) return 0.0;
  double p = static_cast<double>(pos) / n;
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = INFINITY;  // weighted child impurity
};

}  // namespace

DecisionTree DecisionTree::Fit(const Matrix& x, const std::vector<int>& y,
                               const std::vector<size_t>& rows,
                               const TreeParams& params, std::mt19937_64* rng) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "no rows to fit");
  const size_t d = x.front().size();
  std::vector<TreeNode> nodes;
  std::vector<size_t> features(d);
  std::iota(features.begin(), features.end(), 0);

  std::function<int(std::vector<size_t>&, int)> grow =
      [&](std::vector<size_t>& idx, int depth) -> int {
    TreeNode node;
    node.n = idx.size();
    for (size_t i : idx) node.n_pos += y[i] == 1;
    int me = static_cast<int>(nodes.size());
    nodes.push_back(node);

    double parent = Gini(node.n, node.n_pos);
    if (depth >= params.max_depth || parent == 0.0 ||
        idx.size() < 2 * std::max<size_t>(params.min_leaf, 1)) {
      return me;
    }
    std::vector<size_t> candidates = features;
    if (params.max_features > 0 && params.max_features < d && rng) {
      for (size_t k = 0; k < params.max_features; ++k) {
        size_t pick = k + (*rng)() % (d - k);
        std::swap(candidates[k], candidates[pick]);
      }
      candidates.resize(params.max_features);
      std::sort(candidates.begin(), candidates.end());
    }
    SplitChoice best;
    std::vector<size_t> order = idx;
    const size_t min_leaf = std::max<size_t>(params.min_leaf, 1);
    for (size_t f : candidates) {
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return x[a][f] < x[b][f]; });
      size_t left_n = 0, left_pos = 0;
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        left_n++;
        left_pos += y[order[k]] == 1;
        double lo = x[order[k]][f];
        double hi = x[order[k + 1]][f];
        if (lo == hi) continue;
        size_t right_n = node.n - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        double imp = (left_n * Gini(left_n, left_pos) +
                      right_n * Gini(right_n, node.n_pos - left_pos)) /
                     node.n;
        if (imp < best.impurity) {
          best.impurity = imp;
          best.feature = static_cast<int>(f);
          best.threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best.feature < 0 || !(best.impurity < parent - 1e-12)) return me;

    std::vector<size_t> left, right;
    for (size_t i : idx) {
      (x[i][static_cast<size_t>(best.feature)] < best.threshold ? left : right)
          .push_back(i);
    }
    nodes[me].feature = best.feature;
    nodes[me].threshold = best.threshold;
    int l = grow(left, depth + 1);
    int r = grow(right, depth + 1);
    nodes[me].left = l;
    nodes[me].right = r;
    return me;
  };
  std::vector<size_t> root = rows;
  grow(root, 0);
  return DecisionTree(std::move(nodes));
}

size_t DecisionTree::LeafIndex(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree");
  size_t i = 0;
  while (!nodes_[i].leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<size_t>(x[static_cast<size_t>(n.feature)] < n.threshold
                                ? n.left
                                : n.right);
  }
  return i;
}

double DecisionTree::Proba(std::span<const double> x) const {
  return nodes_[LeafIndex(x)].p1();
}

int DecisionTree::depth() const {
  std::function<int(size_t)> rec = [&](size_t i) -> int {
    if (nodes_[i].leaf()) return 0;
    return 1 + std::max(rec(static_cast<size_t>(nodes_[i].left)),
                        rec(static_cast<size_t>(nodes_[i].right)));
  };
  return nodes_.empty() ? 0 : rec(0);
}

nlohmann::json DecisionTree::ToJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes_) {
    arr.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"n", n.n},
                   {"n_pos", n.n_pos}});
  }
  return arr;
}

DecisionTree DecisionTree::FromJson(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    TreeNode t;
    t.feature = n.at("feature");
    t.threshold = n.at("threshold");
    t.left = n.at("left");
    t.right = n.at("right");
    t.n = n.at("n");
    t.n_pos = n.at("n_pos");
    nodes.push_back(t);
  }
  return DecisionTree(std::move(nodes));
}

// ---------------------------------------------------------------------------
// Logistic regression

double LogisticRegression::Proba(std::span<const double> x) const {
  double z = bias;
  for (size_t j = 0; j < weights.size(); ++j) {
    z += weights[j] * (x[j] - mean[j]) / scale[j];
  }
  return Sigmoid(z);
}

double LogisticRegression::Loss(const Matrix& xs, const std::vector<int>& y,
                                std::span<const double> params) {
  const size_t d = params.size() - 1;
  double total = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double z = params[d];
    for (size_t j = 0; j < d; ++j) z += params[j] * xs[i][j];
    // log(1 + e^z) - y z, computed stably.
    double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - y[i] * z;
  }
  return total / static_cast<double>(xs.size());
}

std::vector<double> LogisticRegression::Gradient(const Matrix& xs,
                                                 const std::vector<int>& y,
                                                 std::span<const double> params) {
  const size_t d = params.size() - 1;
  std::vector<double> g(d + 1, 0.0);
  for (size_t i = 0; i < xs.size(); ++i) {
    double z = params[d];
    for (size_t j = 0; j < d; ++j) z += params[j] * xs[i][j];
    double r = Sigmoid(z) - y[i];
    for (size_t j = 0; j < d; ++j) g[j] += r * xs[i][j];
    g[d] += r;
  }
  for (double& v : g) v /= static_cast<double>(xs.size());
  return g;
}

LogisticRegression FitLogistic(const Matrix& x, const std::vector<int>& y,
                               size_t max_iters, double grad_tol,
                               size_t* iterations, double* grad_norm) {
  const size_t n = x.size();
  const size_t d = x.front().size();
  LogisticRegression m;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (const auto& row : x) {
    for (size_t j = 0; j < d; ++j) m.mean[j] += row[j];
  }
  for (double& v : m.mean) v /= n;
  for (const auto& row : x) {
    for (size_t j = 0; j < d; ++j) {
      m.scale[j] += (row[j] - m.mean[j]) * (row[j] - m.mean[j]);
    }
  }
  for (double& v : m.scale) {
    v = std::sqrt(v / n);
    if (!(v > 0)) v = 1.0;
  }
  Matrix xs(n, Row(d));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) xs[i][j] = (x[i][j] - m.mean[j]) / m.scale[j];
  }

  // Lipschitz constant of the mean log-loss gradient: lambda_max(A^T A)/(4n)
  // with A = [xs, 1]; largest eigenvalue by power iteration.
  std::vector<double> v(d + 1, 1.0), av(d + 1);
  double lambda = 1.0;
  for (int it = 0; it < 200; ++it) {
    std::fill(av.begin(), av.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      double dot = v[d];
      for (size_t j = 0; j < d; ++j) dot += xs[i][j] * v[j];
      for (size_t j = 0; j < d; ++j) av[j] += xs[i][j] * dot;
      av[d] += dot;
    }
    double norm = 0.0;
    for (double a : av) norm += a * a;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (size_t j = 0; j <= d; ++j) v[j] = av[j] / norm;
  }
  const double step = 1.0 / (lambda / (4.0 * n) * 1.01);

  std::vector<double> params(d + 1, 0.0);
  double gnorm = INFINITY;
  size_t it = 0;
  for (; it < max_iters; ++it) {
    auto g = LogisticRegression::Gradient(xs, y, params);
    gnorm = 0.0;
    for (double gi : g) gnorm += gi * gi;
    gnorm = std::sqrt(gnorm);
    if (gnorm < grad_tol) break;
    for (size_t j = 0; j <= d; ++j) params[j] -= step * g[j];
  }
  m.weights.assign(params.begin(), params.begin() + static_cast<long>(d));
  m.bias = params[d];
  if (iterations) *iterations = it;
  if (grad_norm) *grad_norm = gnorm;
  return m;
}

// ---------------------------------------------------------------------------
// Trained model

double TrainedModel::Proba(std::span<const double> x) const {
  if (x.size() != features.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "row has " + std::to_string(x.size()) + " values, model expects " +
                    std::to_string(features.size()),
                {{"expected", features.size()}, {"got", x.size()}});
  }
  switch (kind) {
    case ModelKind::kLogisticRegression: return lr.Proba(x);
    case ModelKind::kDecisionTree: return tree.Proba(x);
    case ModelKind::kRandomForest: {
      double s = 0.0;
      for (const auto& t : forest) s += t.Proba(x);
      return forest.empty() ? 0.5 : s / forest.size();
    }
  }
  return 0.5;
}

std::pair<int, double> TrainedModel::Predict(std::span<const double> x) const {
  double p = Proba(x);
  return {p >= 0.5 ? 1 : 0, p};
}

std::vector<int> TrainedModel::PredictBatch(const Matrix& x) const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(Predict(row).first);
  return out;
}

nlohmann::json TrainedModel::ToJson() const {
  nlohmann::json params;
  switch (kind) {
    case ModelKind::kLogisticRegression:
      params = {{"weights", lr.weights},
                {"bias", lr.bias},
                {"mean", lr.mean},
                {"scale", lr.scale}};
      break;
    case ModelKind::kDecisionTree: params = {{"nodes", tree.ToJson()}}; break;
    case ModelKind::kRandomForest: {
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& t : forest) trees.push_back(t.ToJson());
      params = {{"trees", trees}};
      break;
    }
  }
  return {{"format", "qxplain.model"},
          {"version", kModelFormatVersion},
          {"kind", std::string(ModelKindName(kind))},
          {"features", features},
          {"dataset_hash", dataset_hash},
          {"config", config.ToJson()},
          {"split", {{"train", n_train}, {"test", n_test}}},
          {"convergence",
           {{"converged", converged},
            {"iterations", iterations},
            {"final_grad_norm", final_grad_norm}}},
          {"report", report.ToJson()},
          {"params", params}};
}

TrainedModel TrainedModel::FromJson(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "qxplain.model") {
      throw Error(ErrorCode::kParseError, "not a model document");
    }
    int version = j.at("version");
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kParseError,
                  "unsupported model format version " + std::to_string(version),
                  {{"version", version}});
    }
    TrainedModel m;
    auto kind = ModelKindFromName(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kParseError, "unknown model kind");
    m.kind = *kind;
    m.features = j.at("features").get<std::vector<std::string>>();
    m.dataset_hash = j.value("dataset_hash", "");
    m.config = TrainConfig::FromJson(j.at("config"));
    m.n_train = j.at("split").at("train");
    m.n_test = j.at("split").at("test");
    const auto& conv = j.at("convergence");
    m.converged = conv.at("converged");
    m.iterations = conv.at("iterations");
    m.final_grad_norm = conv.at("final_grad_norm");
    m.report = ModelReport::FromJson(j.at("report"));
    const auto& p = j.at("params");
    switch (m.kind) {
      case ModelKind::kLogisticRegression:
        m.lr.weights = p.at("weights").get<std::vector<double>>();
        m.lr.bias = p.at("bias");
        m.lr.mean = p.at("mean").get<std::vector<double>>();
        m.lr.scale = p.at("scale").get<std::vector<double>>();
        break;
      case ModelKind::kDecisionTree:
        m.tree = DecisionTree::FromJson(p.at("nodes"));
        break;
      case ModelKind::kRandomForest:
        for (const auto& t : p.at("trees")) {
          m.forest.push_back(DecisionTree::FromJson(t));
        }
        break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed model document: ") + e.what());
  }
}

void TrainedModel::Save(const std::filesystem::path& path) const {
  WriteFile(path, ToJson().dump(2) + "\n");
}

TrainedModel TrainedModel::Load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, "model " + path.string() + ": " + e.what(),
                {{"path", path.string()}});
  }
  return FromJson(j);
}

std::string TrainedModel::Id() const {
  return Sha256Hex(ToJson().dump()).substr(0, 16);
}

std::pair<std::vector<size_t>, std::vector<size_t>> TrainTestSplit(
    size_t n, double test_fraction, uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  size_t n_test = static_cast<size_t>(std::lround(test_fraction * n));
  std::vector<size_t> test(idx.begin(), idx.begin() + static_cast<long>(n_test));
  std::vector<size_t> train(idx.begin() + static_cast<long>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

std::pair<std::vector<size_t>, std::vector<size_t>> StratifiedTrainTestSplit(
    const std::vector<int>& y, double test_fraction, uint64_t seed) {
  std::vector<size_t> train, test;
  for (int label : {0, 1}) {
    std::vector<size_t> members;
    for (size_t i = 0; i < y.size(); ++i) {
      if (y[i] == label) members.push_back(i);
    }
    auto [tr, te] = TrainTestSplit(members.size(), test_fraction,
                                   seed + static_cast<uint64_t>(label));
    for (size_t k : tr) train.push_back(members[k]);
    for (size_t k : te) test.push_back(members[k]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

TrainedModel Train(const Dataset& data, ModelKind kind, const TrainConfig& config) {
  if (data.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "empty dataset");
  auto [train, test] =
      config.stratify
          ? StratifiedTrainTestSplit(data.y(), config.test_fraction, config.seed)
          : TrainTestSplit(data.rows(), config.test_fraction, config.seed);
  if (train.empty()) train = test;  // test_fraction = 1: degenerate but usable
  size_t pos = 0;
  for (size_t i : train) pos += data.y()[i] == 1;
  if (pos == 0 || pos == train.size()) {
    throw Error(ErrorCode::kSingleClassData,
                "training data contains a single class",
                {{"rows", train.size()}, {"positives", pos}});
  }
  TrainedModel m;
  m.kind = kind;
  m.features = data.feature_names();
  m.config = config;
  m.dataset_hash = data.hash();
  m.n_train = train.size();
  m.n_test = test.size();

  switch (kind) {
    case ModelKind::kLogisticRegression: {
      Matrix x;
      std::vector<int> y;
      for (size_t i : train) {
        x.push_back(data.row(i));
        y.push_back(data.y()[i]);
      }
      m.lr = FitLogistic(x, y, config.max_iters, config.grad_tol, &m.iterations,
                         &m.final_grad_norm);
      m.converged = m.final_grad_norm < config.grad_tol;
      break;
    }
    case ModelKind::kDecisionTree: {
      TreeParams p{config.max_depth, config.min_leaf, 0};
      m.tree = DecisionTree::Fit(data.x(), data.y(), train, p, nullptr);
      break;
    }
    case ModelKind::kRandomForest: {
      const size_t d = data.dims();
      TreeParams p{config.forest_max_depth, config.forest_min_leaf,
                   std::max<size_t>(1, static_cast<size_t>(std::sqrt(double(d))))};
      for (size_t t = 0; t < config.n_trees; ++t) {
        std::mt19937_64 rng(SplitMix64(config.seed + t));
        std::vector<size_t> boot(train.size());
        for (auto& b : boot) b = train[rng() % train.size()];
        m.forest.push_back(DecisionTree::Fit(data.x(), data.y(), boot, p, &rng));
      }
      break;
    }
  }
  if (!test.empty()) {
    std::vector<int> yt, yp;
    for (size_t i : test) {
      yt.push_back(data.y()[i]);
      yp.push_back(m.Predict(data.row(i)).first);
    }
    m.report = ComputeReport(yt, yp);
  }
  return m;
}

}  // namespace qx
