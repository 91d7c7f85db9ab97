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

#ifndef QX_DECOMPOSE_H_
#define QX_DECOMPOSE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qx/interp.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {

inline constexpr std::string_view kUnknownType = "Unknown";

struct ReframedQuestion {
  std::string question;  // verbatim
  std::string explanation_type = std::string(kUnknownType);
  std::string machine_interpretation;
  std::string action;
  std::string likelihood;
  std::string provenance = "pattern";  // pattern | llm | fallback

  bool operator==(const ReframedQuestion&) const = default;
};

nlohmann::json ToJson(const ReframedQuestion& rq);
ReframedQuestion ReframedQuestionFromJson(const nlohmann::json& j);

// Deterministic decomposer: weighted cue phrases plus the best content-word
// overlap with the type's prototypical questions. Scores are monotone in the
// pattern set; ties go to the type listed first in the registry.
class PatternDecomposer {
 public:
  PatternDecomposer(const Registry& registry, const Schema& schema);

  ReframedQuestion Decompose(std::string_view question) const;

  // (type id, score) in registry order.
  std::vector<std::pair<std::string, double>> Scores(
      std::string_view question) const;

  // Action, target and feature constraints read off the question text.
  ParsedInterpretation ExtractInterpretation(std::string_view question) const;
  std::string ExtractAction(std::string_view question) const;
  std::string ExtractLikelihood(std::string_view question) const;

  const Schema& schema() const { return schema_; }
  const Registry& registry() const { return registry_; }

 private:
  struct Form {
    std::vector<std::string> tokens;  // "#" captures a number
    size_t feature;
    int category;  // -1 unless a categorical value form
  };
  struct CompiledCue {
    std::vector<std::vector<std::string>> parts;  // "a ... b"
    double weight;
  };
  struct CompiledType {
    std::string id;
    std::vector<CompiledCue> cues;
    std::vector<std::vector<std::string>> pattern_words;  // content words
  };

  Registry registry_;
  Schema schema_;
  std::vector<Form> forms_;  // longest first
  std::vector<std::vector<std::string>> target_forms_;
  std::vector<CompiledType> types_;
};

// Words and numbers of `text`, lowercased; '#' survives as its own token.
std::vector<std::string> QuestionTokens(std::string_view text);

}  // namespace qx

#endif  // QX_DECOMPOSE_H_
