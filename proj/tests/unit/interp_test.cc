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

#include <cmath>

#include "qx/error.h"
#include "qx/interp.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {
namespace {

const Schema& Pima() {
  static const Schema s = Schema::Load(DefaultDataDir() / "pima.schema.json");
  return s;
}

TEST(InterpTest, DelegateParseExample) {
  auto p = ParseInterpretation(
      "Predict(Diabetes, Age = 45, Sex = Female, BMI = 27, DiabetesPedigreeFunction = 0.2)",
      Pima());
  EXPECT_EQ(p.action, "Predict");
  ASSERT_TRUE(p.target.has_value());
  EXPECT_EQ(*p.target, "Diabetes");
  ASSERT_EQ(p.groups.size(), 1u);
  const auto& g = p.groups[0];
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g.constraints()[0].feature, "Age");
  EXPECT_DOUBLE_EQ(g.constraints()[0].value, 45);
  ASSERT_TRUE(g.constraints()[1].is_categorical());
  EXPECT_EQ(*g.constraints()[1].category, "Female");
  EXPECT_EQ(g.constraints()[3].feature, "DiabetesPedigreeFunction");
  EXPECT_TRUE(p.residue.empty());
}

TEST(InterpTest, AliasesResolveToCanonicalNames) {
  auto p = ParseInterpretation("Explain(glucose > 120, body mass index <= 30)", Pima());
  ASSERT_EQ(p.groups.size(), 1u);
  EXPECT_EQ(p.groups[0].constraints()[0].feature, "Glucose");
  EXPECT_EQ(p.groups[0].constraints()[0].op, ConstraintOp::kGt);
  EXPECT_EQ(p.groups[0].constraints()[1].feature, "BMI");
  EXPECT_EQ(p.groups[0].constraints()[1].op, ConstraintOp::kLe);
}

TEST(InterpTest, ParenthesizedTuplesAreSeparateGroups) {
  auto p = ParseInterpretation("Filter((Age = 30, BMI = 25), (Age = 60, BMI = 35))", Pima());
  ASSERT_EQ(p.groups.size(), 2u);
  EXPECT_DOUBLE_EQ(p.groups[1].Find("Age")->value, 60);
}

TEST(InterpTest, UnresolvedTokensLandInResidue) {
  auto p = ParseInterpretation("Explain(Diabetes, Cholesterol = 200, Glucose = 150)", Pima());
  EXPECT_FALSE(p.residue.empty());
  ASSERT_EQ(p.groups.size(), 1u);
  EXPECT_EQ(p.groups[0].size(), 1u);
}

TEST(InterpTest, UnbalancedBracketsAreUnusable) {
  try {
    ParseInterpretation("Predict(Diabetes, Age = 45", Pima());
    FAIL() << "expected UnusableParse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnusableParse);
  }
}

TEST(InterpTest, RangeIsHalfOpen) {
  auto c = FeatureConstraint::Range("Glucose", 100, 140);
  EXPECT_TRUE(ConstraintSatisfied(c, CellValue{100.0}));
  EXPECT_TRUE(ConstraintSatisfied(c, CellValue{139.999}));
  EXPECT_FALSE(ConstraintSatisfied(c, CellValue{140.0}));
  EXPECT_FALSE(ConstraintSatisfied(c, CellValue{99.0}));
}

TEST(InterpTest, CategoricalAgainstNumberIsTypeMismatch) {
  auto c = FeatureConstraint::Categorical("Sex", "Female");
  EXPECT_THROW(ConstraintSatisfied(c, CellValue{1.0}), Error);
}

TEST(InterpTest, TwoBoundsIntersectIntoRange) {
  FeatureGroup g;
  g.Add(FeatureConstraint::Numeric("BMI", ConstraintOp::kGe, 25));
  g.Add(FeatureConstraint::Numeric("BMI", ConstraintOp::kLt, 30));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.constraints()[0].op, ConstraintOp::kRange);
  EXPECT_DOUBLE_EQ(g.constraints()[0].lower, 25);
  EXPECT_DOUBLE_EQ(g.constraints()[0].upper, 30);
}

TEST(InterpTest, SerializeParseRoundTrip) {
  const char* texts[] = {
      "Predict(Diabetes, Age = 45, BMI = 27.5)",
      "Explain(Glucose = [100, 140))",
      "Filter((Age = 30), (Age = 60, Insulin > 100))",
      "Explain(Diabetes, BloodPressure = (-inf, 80))",
  };
  for (const char* t : texts) {
    auto p = ParseInterpretation(t, Pima());
    std::string s = SerializeInterpretation(p);
    auto q = ParseInterpretation(s, Pima());
    EXPECT_TRUE(p.SameMeaning(q)) << t << " -> " << s;
    EXPECT_EQ(SerializeInterpretation(q), s);
  }
}

TEST(InterpTest, JsonRoundTrip) {
  auto p = ParseInterpretation("Explain(Glucose = [100, 140), Sex = Female)", Pima());
  for (const auto& c : p.groups[0].constraints()) {
    EXPECT_EQ(ConstraintFromJson(ToJson(c)), c);
  }
  EXPECT_EQ(GroupFromJson(ToJson(p.groups[0])), p.groups[0]);
}

}  // namespace
}  // namespace qx
