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

#ifndef QX_REGISTRY_H_
#define QX_REGISTRY_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qx {

enum class Modality { kFeatures, kInstances, kRules, kDataSummary, kCounterfactuals };

std::string_view ModalityName(Modality m);
std::optional<Modality> ModalityFromName(std::string_view name);

// Metric ids bound to each output modality. Never empty.
const std::vector<std::string>& MetricsForModality(Modality m);

enum class Cardinality { kOne, kMany, kOptional };

struct TemplateSlot {
  std::string name;
  Modality modality = Modality::kFeatures;
  Cardinality cardinality = Cardinality::kOne;
  bool operator==(const TemplateSlot&) const = default;
};

struct ExplanationTemplate {
  std::vector<TemplateSlot> slots;
  std::string text;  // "{slot}" placeholders

  // Missing one/many slots throw TemplateSlotUnfillable naming the slot's
  // modality; missing optional slots render as "none".
  std::string Render(const std::map<std::string, std::string>& values) const;
  bool operator==(const ExplanationTemplate&) const = default;
};

// A prototypical question. Optional gold fields let the question-bank
// generator build the reframed question alongside the instantiated text.
// Placeholders: {T} target, {NT} negative label, {F1}/{F2} features,
// {V1}/{V2} values, {LO1}/{HI1} an interval on F1.
struct QuestionPattern {
  std::string text;
  bool has_gold = false;
  std::string action;
  std::string interpretation;
  std::string likelihood;
  bool operator==(const QuestionPattern&) const = default;
};

// Weighted cue phrase. "a ... b" matches a followed later by b.
struct Cue {
  std::string phrase;
  double weight = 1.0;
  bool operator==(const Cue&) const = default;
};

struct ExplanationType {
  std::string id;
  std::string label;
  std::string description;
  std::vector<Modality> modalities;
  std::vector<QuestionPattern> questions;
  std::vector<Cue> cues;
  ExplanationTemplate explanation_template;
  bool operator==(const ExplanationType&) const = default;
};

struct ExplainerRegistration {
  std::string id;
  std::string description;
  std::vector<std::string> type_ids;
  Modality modality = Modality::kFeatures;
  std::vector<std::string> metric_ids;
  bool operator==(const ExplainerRegistration&) const = default;
};

// Immutable after load; safe to share across threads.
class Registry {
 public:
  Registry() = default;

  // Line-oriented format; see data/registry.eo.
  static Registry FromText(std::string_view text);
  static Registry FromJson(const nlohmann::json& j);
  // Picks JSON when the first non-blank character is '{'.
  static Registry Load(const std::filesystem::path& path);
  static Registry LoadDefault();  // bundled registry

  std::string ToText() const;
  nlohmann::json ToJson() const;

  const std::vector<ExplanationType>& types() const { return types_; }
  const std::vector<ExplainerRegistration>& explainers() const {
    return explainers_;
  }
  const ExplanationType* FindType(std::string_view id) const;
  const ExplanationType& Type(std::string_view id) const;  // UnknownType
  std::vector<ExplainerRegistration> ExplainersForType(std::string_view id) const;
  const ExplanationTemplate& TemplateForType(std::string_view id) const;

  bool operator==(const Registry&) const = default;

 private:
  void Validate() const;

  std::vector<ExplanationType> types_;
  std::vector<ExplainerRegistration> explainers_;
};

// Directory holding the bundled registry and schema (build tree or install).
std::filesystem::path DefaultDataDir();

}  // namespace qx

#endif  // QX_REGISTRY_H_
