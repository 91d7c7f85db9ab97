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

#ifndef QX_RULES_H_
#define QX_RULES_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/interp.h"
#include "qx/model.h"

namespace qx {

struct Rule {
  // RANGE antecedents, half-open [lower, upper).
  std::vector<FeatureConstraint> antecedents;
  std::vector<size_t> columns;  // model column of each antecedent
  int label = 0;
  size_t coverage = 0;  // training rows reaching the leaf
  double confidence = 0.0;  // share of `label` among them
  int tree_id = 0;

  bool Covers(std::span<const double> x) const;
  // Distinct features among the antecedents.
  size_t length() const;
};

struct RuleSet {
  std::vector<Rule> rules;
  std::vector<std::string> features;  // model columns
};

// One rule per root-to-leaf path. Without `simplify` every split on the path
// stays a separate antecedent; with it bounds on the same feature are
// intersected into one interval. Coverage counts come from `train_x`.
RuleSet ExtractTreeRules(const DecisionTree& tree,
                         const std::vector<std::string>& features,
                         const Matrix& train_x, bool simplify = true,
                         int tree_id = 0);

// Decision trees directly; forests tree by tree (tagged by tree id).
// Throws NotATreeModel for logistic regression.
RuleSet ExtractRules(const TrainedModel& model, const Matrix& train_x,
                     bool simplify = true);

// "IF Glucose = (-inf, 123.5) AND BMI = [28.25, inf) THEN label = {0}"
std::string RuleToString(const Rule& rule);
std::string RuleAntecedentText(const Rule& rule);

// Reads the textual form above; `<` before a bound is tolerated. Features
// resolve through the schema. Throws ParseError.
Rule ParseRule(std::string_view text, const Schema& schema);

nlohmann::json ToJson(const Rule& r);
nlohmann::json ToJson(const RuleSet& rs);

}  // namespace qx

#endif  // QX_RULES_H_
