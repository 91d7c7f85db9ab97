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

#ifndef QX_INTERP_H_
#define QX_INTERP_H_

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qx/schema.h"

namespace qx {

enum class ConstraintOp { kEq, kLt, kGt, kLe, kGe, kRange };

std::string_view ConstraintOpName(ConstraintOp op);

// One filter on one feature. RANGE intervals are half-open [lower, upper).
struct FeatureConstraint {
  std::string feature;  // canonical schema name
  ConstraintOp op = ConstraintOp::kEq;
  double value = 0.0;
  std::optional<std::string> category;  // set for categorical EQ
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static FeatureConstraint Numeric(std::string feature, ConstraintOp op,
                                   double value);
  static FeatureConstraint Categorical(std::string feature, std::string value);
  static FeatureConstraint Range(std::string feature, double lower,
                                 double upper);

  bool is_categorical() const { return category.has_value(); }
  bool operator==(const FeatureConstraint&) const = default;
};

// Ordered feature -> constraint map; insertion order is source order.
class FeatureGroup {
 public:
  FeatureGroup() = default;
  explicit FeatureGroup(std::vector<FeatureConstraint> constraints);

  // A second bound on an already-constrained feature is intersected into a
  // RANGE when the pair forms an interval; otherwise it replaces the first.
  void Add(FeatureConstraint c);

  const std::vector<FeatureConstraint>& constraints() const { return items_; }
  const FeatureConstraint* Find(std::string_view feature) const;
  bool empty() const { return items_.empty(); }
  size_t size() const { return items_.size(); }
  bool operator==(const FeatureGroup&) const = default;

 private:
  std::vector<FeatureConstraint> items_;
};

struct ParsedInterpretation {
  std::string action = "Explain";
  std::optional<std::string> target;
  // Bare feature names appearing as arguments or as the action itself.
  std::vector<std::string> focus_features;
  std::vector<FeatureGroup> groups;
  std::vector<std::string> residue;  // unparsed or unresolved source spans

  // Equality ignoring residue.
  bool SameMeaning(const ParsedInterpretation& other) const;
};

// Grammar (see docs/interpretation-grammar.md):
//   interp    := item ((',' | 'AND') item)*
//   item      := action '(' args ')' | '(' cond_list ')' | cond
//   args      := term ((',' | 'AND') term)*
//   term      := label | feature | cond | '(' cond_list ')' | action '(' args ')'
//   cond      := feature op value | feature ('=' | ':') interval
//   interval  := ('(' | '[') bound ',' bound (')' | ']')
// Throws UnusableParse on unbalanced brackets or when neither an action nor a
// resolvable condition is present.
ParsedInterpretation ParseInterpretation(std::string_view text,
                                         const Schema& schema);

// Canonical form `Action(Target, f1 = v1, ..., (g1 = w1, ...))`.
std::string SerializeInterpretation(const ParsedInterpretation& parsed);
std::string SerializeConstraint(const FeatureConstraint& c);
std::string SerializeGroup(const FeatureGroup& g, std::string_view sep = ", ");

using CellValue = std::variant<double, std::string>;

// Default relative tolerance for numeric equality on exact data.
inline constexpr double kEqTolerance = 1e-9;

// Throws TypeMismatch when a categorical constraint meets a number or vice
// versa.
bool ConstraintSatisfied(const FeatureConstraint& c, const CellValue& value,
                         double eq_tolerance = kEqTolerance);

nlohmann::json ToJson(const FeatureConstraint& c);
nlohmann::json ToJson(const FeatureGroup& g);
nlohmann::json ToJson(const ParsedInterpretation& p);
FeatureConstraint ConstraintFromJson(const nlohmann::json& j);
FeatureGroup GroupFromJson(const nlohmann::json& j);

}  // namespace qx

#endif  // QX_INTERP_H_
