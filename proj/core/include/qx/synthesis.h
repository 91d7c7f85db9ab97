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

#ifndef QX_SYNTHESIS_H_
#define QX_SYNTHESIS_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/decompose.h"
#include "qx/delegate.h"
#include "qx/llm_client.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {

inline constexpr size_t kDefaultTopC = 3;

// The answer to one question: text, type, explainers, rq and uq, plus the
// run it came from.
struct ExplanationTuple {
  std::string text;
  std::string explanation_type;
  std::vector<std::string> explainers;
  ReframedQuestion rq;
  std::string uq;
  nlohmann::json metrics = nlohmann::json::array();  // per explainer result
  std::string run_id;
  std::string mode = "template";  // template | llm | llm-fallback
  // "Provenance: ..." line naming the run directories; kept apart from the
  // text so that replays compare equal.
  std::string provenance;
  nlohmann::json slot_provenance = nlohmann::json::object();  // slot -> dirs

  // text + blank line + provenance.
  std::string Render() const;
  nlohmann::json ToJson() const;
  static ExplanationTuple FromJson(const nlohmann::json& j);
  // Equality of everything except run id, directories and provenance.
  bool SameContent(const ExplanationTuple& other) const;
};

// Ranks each successful result's items by the modality's native weight
// (|phi|, rule coverage, prototype weight, counterfactual proximity), keeps
// the top_c, and fills the type's template. Throws NoOutputs and
// TemplateSlotUnfillable.
ExplanationTuple Synthesize(const DelegateRun& run, const Registry& registry,
                            const Schema& schema, size_t top_c = kDefaultTopC);

// Retrieval-augmented prompt: template, question, feature groups and the
// top_c rows of every output.
std::string BuildSynthesisPrompt(const DelegateRun& run, const Registry& registry,
                                 const Schema& schema, size_t top_c = kDefaultTopC);

// mode=llm on success; template tuple with mode=llm-fallback on any failure.
ExplanationTuple LlmSynthesize(const DelegateRun& run, const Registry& registry,
                               const Schema& schema, const LlmEndpoint& endpoint,
                               size_t top_c = kDefaultTopC);

struct GroundingReport {
  double score = 1.0;
  std::vector<std::string> tokens;
  std::vector<std::string> flagged;  // tokens with no matching output value

  nlohmann::json ToJson() const;
};

// Standalone numbers in `text`. Digits glued to letters (identifiers,
// timestamps, units such as m2) are not numbers.
std::vector<std::string> NumericTokens(std::string_view text);

// A token with k decimals matches v when ||token| - |v|| <= 0.5 * 10^-k.
// No tokens scores 1.0.
GroundingReport LexicalGrounding(std::string_view text, const std::vector<double>& pool);

// Pool = every number in the persisted output.csv files of the run.
std::vector<double> GroundingPool(const DelegateRun& run, const RunStore& store);
GroundingReport LexicalGroundingScore(const ExplanationTuple& tuple,
                                      const DelegateRun& run, const RunStore& store);

}  // namespace qx

#endif  // QX_SYNTHESIS_H_
