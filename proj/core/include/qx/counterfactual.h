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

#ifndef QX_COUNTERFACTUAL_H_
#define QX_COUNTERFACTUAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qx/dataset.h"
#include "qx/shapley.h"

namespace qx {

// Where a counterfactual may move: observed bounds, display precision and
// frozen columns, all in model-column order.
struct FeatureSpace {
  std::vector<std::string> names;
  Row lower, upper;
  std::vector<int> decimals;
  std::vector<char> immutable;

  // Bounds from the data, precision and immutability from its schema;
  // `immutable_override` (feature names) replaces the schema flags when set.
  static FeatureSpace FromDataset(
      const Dataset& data,
      const std::optional<std::vector<std::string>>& immutable_override = std::nullopt);
  size_t size() const { return names.size(); }
  double Clip(size_t j, double v) const;
};

struct CounterfactualConfig {
  size_t k = 3;
  size_t restarts = 8;
  size_t evaluations = 2000;  // per restart
  double lambda_proximity = 0.5;
  double lambda_diversity = 0.1;
  uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct Counterfactual {
  Row values;
  int label = 0;
  double probability = 0.0;   // P(positive class)
  std::vector<double> deltas;  // values - original
  double proximity = 0.0;      // mean range-normalized |delta|
};

struct CounterfactualSet {
  Row original;
  int original_label = 0;
  double original_probability = 0.0;
  std::vector<Counterfactual> items;  // ascending proximity
  std::vector<std::string> features;
  std::vector<std::string> immutable;
  CounterfactualConfig config;
};

// Seeded random-restart hill climb on
//   hinge(margin past the decision boundary) + l1 * proximity - l2 * diversity.
// Each returned row is re-predicted and flips the label of `x`; immutable
// columns are copied from `x`. Throws NoCounterfactualFound with the best
// margin reached, InvalidArgument for k == 0.
CounterfactualSet CounterfactualSearch(const ModelFn& proba,
                                       std::span<const double> x,
                                       const FeatureSpace& space,
                                       const CounterfactualConfig& config = {});

nlohmann::json ToJson(const CounterfactualSet& set);

}  // namespace qx

#endif  // QX_COUNTERFACTUAL_H_
