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

#ifndef QX_DECOMPOSE_EVAL_H_
#define QX_DECOMPOSE_EVAL_H_

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/decompose.h"
#include "qx/question_bank.h"

namespace qx {

// Normalized similarity counted as an edit-distance match.
inline constexpr double kEditMatchThreshold = 0.9;

size_t Levenshtein(std::string_view a, std::string_view b);
// 1 - d / max(|a|, |b|); 1 for two empty strings.
double LevenshteinSimilarity(std::string_view a, std::string_view b);

struct FieldScores {
  double exact_match = 0.0;
  double edit_match = 0.0;
  // Bag-of-token overlap per entry, averaged over entries.
  double token_precision = 0.0;
  double token_recall = 0.0;
  double token_f1 = 0.0;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;
};

struct ConfusionReport {
  std::vector<std::string> labels;     // gold types, sorted
  std::vector<std::string> predicted;  // columns: labels + other predictions
  std::vector<std::vector<size_t>> matrix;  // [gold][predicted]
  std::map<std::string, ClassScores> per_class;
  ClassScores micro, macro, weighted;
  double accuracy = 0.0;
};

struct DecomposeReport {
  size_t n = 0;
  std::map<std::string, FieldScores> fields;  // explanation_type,
                                              // machine_interpretation,
                                              // action, likelihood
  ConfusionReport confusion;

  nlohmann::json ToJson() const;
  // Column layout of a classification report.
  std::string ConfusionTable() const;
};

DecomposeReport EvaluatePredictions(const std::vector<QuestionBankEntry>& bank,
                                    const std::vector<ReframedQuestion>& predicted);

DecomposeReport EvaluateDecomposer(
    const std::vector<QuestionBankEntry>& bank,
    const std::function<ReframedQuestion(const std::string&)>& decomposer);

}  // namespace qx

#endif  // QX_DECOMPOSE_EVAL_H_
