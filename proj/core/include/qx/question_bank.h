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

#ifndef QX_QUESTION_BANK_H_
#define QX_QUESTION_BANK_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qx/decompose.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {

struct QuestionBankEntry {
  std::string uq;
  ReframedQuestion gold;
  std::string source = "generated";  // generated | human_verified

  bool operator==(const QuestionBankEntry&) const = default;
};

using TypeCounts = std::vector<std::pair<std::string, size_t>>;

// 279 questions: data 80, case_based 60, rationale 50, contextual 35,
// contrastive 29, counterfactual 25.
TypeCounts DefaultBankCounts();

// Instantiates each type's gold-annotated question patterns with schema
// features and values drawn uniformly from [min, max] (rounded to the
// feature's decimals). Patterns cycle round-robin; features and values come
// from a mt19937_64 seeded with `seed`. Gold interpretations are stored in
// canonical form. Throws UnsupportedType for a requested type without
// instantiable patterns, UnknownType for ids missing from the registry.
std::vector<QuestionBankEntry> GenerateQuestionBank(const Schema& schema,
                                                    const Registry& registry,
                                                    const TypeCounts& counts,
                                                    uint64_t seed);
// Same count for every registry type.
std::vector<QuestionBankEntry> GenerateQuestionBank(const Schema& schema,
                                                    const Registry& registry,
                                                    size_t n_per_type,
                                                    uint64_t seed);

// Tab-separated: uq, type, action, interpretation, likelihood, source.
std::string BankToTsv(const std::vector<QuestionBankEntry>& bank);
std::vector<QuestionBankEntry> BankFromTsv(std::string_view text);

struct BankSplit {
  std::vector<QuestionBankEntry> train;
  std::vector<QuestionBankEntry> test;
};

// Per-type shuffle, then the first round(test_fraction * n_type) entries of
// each type go to test.
BankSplit StratifiedSplit(const std::vector<QuestionBankEntry>& bank,
                          double test_fraction, uint64_t seed);

}  // namespace qx

#endif  // QX_QUESTION_BANK_H_
