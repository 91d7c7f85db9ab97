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

#ifndef QX_METRICS_H_
#define QX_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qx/registry.h"
#include "qx/rules.h"
#include "qx/shapley.h"

namespace qx {

struct MetricReport {
  std::string metric;
  std::optional<double> value;  // nullopt when undefined (e.g. zero variance)
  Modality modality = Modality::kFeatures;
  std::string explainer;
  size_t instances = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string note;  // why the value is undefined, if it is

  nlohmann::json ToJson() const;
  static MetricReport FromJson(const nlohmann::json& j);
};

// Throw DegenerateVariance when either input is constant.
double PearsonCorrelation(std::span<const double> a, std::span<const double> b);
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);
// 1-based ranks, ties share their average rank.
std::vector<double> AverageRanks(std::span<const double> v);

// Pearson correlation between phi_i and f(x) - f(x with feature i set to
// reference_i).
double Faithfulness(const ModelFn& f, std::span<const double> x,
                    std::span<const double> phi,
                    std::span<const double> reference);

// Per feature: log-loss against `label` after setting feature i to
// reference_i, minus the log-loss at x. `f` returns P(label = 1).
std::vector<double> ExpectedLossDeltas(const ModelFn& f, std::span<const double> x,
                                       int label, std::span<const double> reference);

// Spearman correlation between |phi| and `expectations`.
double Monotonicity(std::span<const double> phi, std::span<const double> expectations);

// Share of records where the first covering rule (rules ordered by coverage,
// descending, stable) predicts the model's label. Records no rule covers
// count as disagreement; an empty rule set scores 0.
double Fidelity(const RuleSet& rules, const Matrix& records,
                const std::vector<int>& model_labels);

// Mean number of distinct features per rule. Throws EmptyRuleSet.
double AverageRuleLength(const std::vector<Rule>& rules);

// Mean pairwise Euclidean distance. Throws TooFewInstances below 2 rows.
double Diversity(const Matrix& rows);

// Biased squared MMD with an RBF kernel. Throws InvalidBandwidth.
double NonRepresentativeness(const Matrix& selected, const Matrix& reference,
                             double bandwidth);

}  // namespace qx

#endif  // QX_METRICS_H_
