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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "qx/decompose.h"
#include "qx/decompose_eval.h"
#include "qx/error.h"
#include "qx/question_bank.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {
namespace {

const Schema& Pima() {
  static const Schema s = Schema::Load(DefaultDataDir() / "pima.schema.json");
  return s;
}

const Registry& Reg() {
  static const Registry r = Registry::LoadDefault();
  return r;
}

TEST(RegistryTest, BundledTypesAndExplainers) {
  std::set<std::string> ids;
  for (const auto& t : Reg().types()) ids.insert(t.id);
  EXPECT_EQ(ids, (std::set<std::string>{"case_based", "contextual", "contrastive",
                                        "counterfactual", "data", "rationale"}));
  auto names = [](const std::vector<ExplainerRegistration>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(r.id);
    return out;
  };
  EXPECT_EQ(names(Reg().ExplainersForType("rationale")), std::vector<std::string>{"rulexai"});
  EXPECT_EQ(names(Reg().ExplainersForType("data")),
            (std::vector<std::string>{"protodash", "data_summary"}));
  EXPECT_TRUE(Reg().ExplainersForType("contextual").empty());
}

TEST(RegistryTest, UnknownTypeThrows) {
  try {
    Reg().Type("astrological");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownType);
  }
}

TEST(RegistryTest, DuplicateTypeRejected) {
  const char* text =
      "id: a\nlabel: A\ndescription: d\nmodalities: Rules\nquestion: Why {T}? => Explain | "
      "Explain({T})\n\nid: a\nlabel: A\ndescription: d\nmodalities: Rules\nquestion: Why {T}? => "
      "Explain | Explain({T})\n";
  EXPECT_THROW(Registry::FromText(text), Error);
}

TEST(RegistryTest, TemplateSlots) {
  const auto& t = Reg().TemplateForType("data");
  // "prototypes" is optional and renders as "none" when missing.
  std::string s = t.Render({{"summary", "S"}});
  EXPECT_NE(s.find("none"), std::string::npos);
  try {
    t.Render({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTemplateSlotUnfillable);
  }
}

TEST(RegistryTest, JsonRoundTrip) {
  auto j = Reg().ToJson();
  EXPECT_EQ(Registry::FromJson(j).ToJson(), j);
}

TEST(DecomposeTest, DelegateParseQuestion) {
  PatternDecomposer d(Reg(), Pima());
  auto rq = d.Decompose(
      "How did the model justify predicting Diabetes for a 45-year-old female with a BMI of 27 "
      "and a Diabetes Pedigree Function of 0.2?");
  EXPECT_EQ(rq.explanation_type, "rationale");
  EXPECT_EQ(rq.action, "Predict");
  EXPECT_EQ(rq.machine_interpretation,
            "Predict(Diabetes, Age = 45, Sex = Female, BMI = 27, DiabetesPedigreeFunction = 0.2)");
}

TEST(DecomposeTest, Deterministic) {
  PatternDecomposer d(Reg(), Pima());
  const char* q = "What if the patient's Glucose were 150 instead?";
  EXPECT_EQ(d.Decompose(q), d.Decompose(q));
}

TEST(QuestionBankTest, DefaultCountsAndDeterminism) {
  auto a = GenerateQuestionBank(Pima(), Reg(), DefaultBankCounts(), 7);
  auto b = GenerateQuestionBank(Pima(), Reg(), DefaultBankCounts(), 7);
  EXPECT_EQ(a.size(), 279u);
  EXPECT_EQ(a, b);
  std::map<std::string, size_t> per;
  for (const auto& e : a) ++per[e.gold.explanation_type];
  EXPECT_EQ(per["data"], 80u);
  EXPECT_EQ(per["counterfactual"], 25u);
}

TEST(QuestionBankTest, TsvRoundTrip) {
  auto a = GenerateQuestionBank(Pima(), Reg(), 3, 11);
  EXPECT_EQ(BankFromTsv(BankToTsv(a)), a);
}

TEST(QuestionBankTest, StratifiedSplitKeepsEveryType) {
  auto bank = GenerateQuestionBank(Pima(), Reg(), DefaultBankCounts(), 7);
  auto split = StratifiedSplit(bank, 0.2, 3);
  EXPECT_EQ(split.train.size() + split.test.size(), bank.size());
  std::set<std::string> test_types;
  for (const auto& e : split.test) test_types.insert(e.gold.explanation_type);
  EXPECT_EQ(test_types.size(), 6u);
}

// Textbook dynamic program, written out independently.
size_t OracleLevenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<size_t>> d(a.size() + 1, std::vector<size_t>(b.size() + 1));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

TEST(DecomposeEvalTest, LevenshteinMatchesOracle) {
  const char* words[] = {"", "kitten", "sitting", "Predict(Diabetes)", "Explain(Diabetes)",
                         "flaw", "lawn"};
  for (const char* a : words) {
    for (const char* b : words) EXPECT_EQ(Levenshtein(a, b), OracleLevenshtein(a, b));
  }
  EXPECT_DOUBLE_EQ(LevenshteinSimilarity("", ""), 1.0);
}

TEST(DecomposeEvalTest, PerfectPredictionsScoreOne) {
  auto bank = GenerateQuestionBank(Pima(), Reg(), 4, 5);
  std::vector<ReframedQuestion> gold;
  for (const auto& e : bank) gold.push_back(e.gold);
  auto r = EvaluatePredictions(bank, gold);
  EXPECT_DOUBLE_EQ(r.confusion.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.confusion.macro.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.fields.at("machine_interpretation").exact_match, 1.0);
}

TEST(DecomposeEvalTest, ConfusionCountsHandExample) {
  std::vector<QuestionBankEntry> bank(3);
  bank[0].gold.explanation_type = "data";
  bank[1].gold.explanation_type = "data";
  bank[2].gold.explanation_type = "rationale";
  std::vector<ReframedQuestion> pred(3);
  pred[0].explanation_type = "data";
  pred[1].explanation_type = "rationale";
  pred[2].explanation_type = "rationale";
  auto r = EvaluatePredictions(bank, pred);
  // data: P 1, R 0.5; rationale: P 0.5, R 1.
  EXPECT_DOUBLE_EQ(r.confusion.per_class.at("data").precision, 1.0);
  EXPECT_DOUBLE_EQ(r.confusion.per_class.at("data").recall, 0.5);
  EXPECT_DOUBLE_EQ(r.confusion.per_class.at("rationale").precision, 0.5);
  EXPECT_NEAR(r.confusion.accuracy, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.confusion.micro.f1, 2.0 / 3.0, 1e-12);
}

}  // namespace
}  // namespace qx
