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

#include "qx/rules.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

bool Rule::Covers(std::span<const double> x) const {
  for (size_t a = 0; a < antecedents.size(); ++a) {
    double v = x[columns[a]];
    if (!(v >= antecedents[a].lower && v < antecedents[a].upper)) return false;
  }
  return true;
}

size_t Rule::length() const {
  std::set<std::string> f;
  for (const auto& a : antecedents) f.insert(a.feature);
  return f.size();
}

RuleSet ExtractTreeRules(const DecisionTree& tree,
                         const std::vector<std::string>& features,
                         const Matrix& train_x, bool simplify, int tree_id) {
  RuleSet out;
  out.features = features;
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return out;

  std::vector<size_t> leaf_count(nodes.size(), 0);
  for (const auto& row : train_x) leaf_count[tree.LeafIndex(row)]++;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<size_t, FeatureConstraint>> path;
  std::function<void(size_t)> walk = [&](size_t i) {
    const auto& n = nodes[i];
    if (n.leaf()) {
      Rule r;
      r.tree_id = tree_id;
      r.label = n.p1() >= 0.5 ? 1 : 0;
      r.confidence = r.label ? n.p1() : 1.0 - n.p1();
      r.coverage = leaf_count[i];
      for (const auto& [col, c] : path) {
        if (simplify) {
          auto it = std::find(r.columns.begin(), r.columns.end(), col);
          if (it != r.columns.end()) {
            auto& prev = r.antecedents[static_cast<size_t>(it - r.columns.begin())];
            prev.lower = std::max(prev.lower, c.lower);
            prev.upper = std::min(prev.upper, c.upper);
            continue;
          }
        }
        r.antecedents.push_back(c);
        r.columns.push_back(col);
      }
      out.rules.push_back(std::move(r));
      return;
    }
    size_t col = static_cast<size_t>(n.feature);
    path.emplace_back(col, FeatureConstraint::Range(features.at(col), -kInf, n.threshold));
    walk(static_cast<size_t>(n.left));
    path.back().second = FeatureConstraint::Range(features.at(col), n.threshold, kInf);
    walk(static_cast<size_t>(n.right));
    path.pop_back();
  };
  walk(0);
  return out;
}

RuleSet ExtractRules(const TrainedModel& model, const Matrix& train_x,
                     bool simplify) {
  switch (model.kind) {
    case ModelKind::kDecisionTree:
      return ExtractTreeRules(model.tree, model.features, train_x, simplify);
    case ModelKind::kRandomForest: {
      RuleSet out;
      out.features = model.features;
      for (size_t t = 0; t < model.forest.size(); ++t) {
        auto rs = ExtractTreeRules(model.forest[t], model.features, train_x,
                                   simplify, static_cast<int>(t));
        for (auto& r : rs.rules) out.rules.push_back(std::move(r));
      }
      return out;
    }
    case ModelKind::kLogisticRegression: break;
  }
  throw Error(ErrorCode::kNotATreeModel,
              std::string("rule extraction needs a tree model, got ") +
                  std::string(ModelKindName(model.kind)));
}

std::string RuleAntecedentText(const Rule& rule) {
  std::string s;
  for (size_t a = 0; a < rule.antecedents.size(); ++a) {
    if (a) s += " AND ";
    const auto& c = rule.antecedents[a];
    s += c.feature + " = ";
    s += std::isinf(c.lower) ? "(-inf" : "[" + FormatExact(c.lower);
    s += ", ";
    s += std::isinf(c.upper) ? "inf)" : FormatExact(c.upper) + ")";
  }
  return s;
}

std::string RuleToString(const Rule& rule) {
  return "IF " + RuleAntecedentText(rule) + " THEN label = {" +
         std::to_string(rule.label) + "}";
}

Rule ParseRule(std::string_view text, const Schema& schema) {
  std::string t = Trim(text);
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kParseError, "rule '" + t + "': " + why, {{"rule", t}});
  };
  if (!StartsWith(t, "IF ")) throw fail("expected IF");
  size_t then = t.find(" THEN ");
  if (then == std::string::npos) throw fail("expected THEN");
  std::string body = t.substr(3, then - 3);
  std::string head = t.substr(then + 6);
  Rule r;
  size_t lb = head.find('{'), rb = head.find('}');
  if (lb == std::string::npos || rb == std::string::npos || rb < lb) {
    throw fail("expected label = {k}");
  }
  auto label = ParseDouble(Trim(head.substr(lb + 1, rb - lb - 1)));
  if (!label) throw fail("label is not a number");
  r.label = static_cast<int>(*label);

  size_t pos = 0;
  while (pos <= body.size()) {
    size_t next = body.find(" AND ", pos);
    std::string part = body.substr(pos, next == std::string::npos ? std::string::npos
                                                                   : next - pos);
    ParsedInterpretation p;
    try {
      p = ParseInterpretation(part, schema);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (p.groups.empty() || p.groups.front().empty() || !p.residue.empty()) {
      throw fail("cannot read antecedent '" + Trim(part) + "'");
    }
    for (const auto& c : p.groups.front().constraints()) {
      r.antecedents.push_back(c);
      const auto& mf = schema.model_features();
      auto it = std::find(mf.begin(), mf.end(), schema.IndexOf(c.feature));
      if (it == mf.end()) throw fail(c.feature + " is not a model feature");
      r.columns.push_back(static_cast<size_t>(it - mf.begin()));
    }
    if (next == std::string::npos) break;
    pos = next + 5;
  }
  return r;
}

nlohmann::json ToJson(const Rule& r) {
  nlohmann::json ants = nlohmann::json::array();
  for (const auto& a : r.antecedents) ants.push_back(ToJson(a));
  return {{"rule", RuleToString(r)}, {"antecedents", ants},
          {"label", r.label},        {"coverage", r.coverage},
          {"confidence", r.confidence}, {"tree_id", r.tree_id}};
}

nlohmann::json ToJson(const RuleSet& rs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rs.rules) arr.push_back(ToJson(r));
  return {{"features", rs.features}, {"rules", arr}};
}

}  // namespace qx
