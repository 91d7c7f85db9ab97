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

#include <benchmark/benchmark.h>

#include "qx/common.h"
#include "qx/counterfactual.h"
#include "qx/dataset.h"
#include "qx/decompose.h"
#include "qx/interp.h"
#include "qx/model.h"
#include "qx/protodash.h"
#include "qx/registry.h"
#include "qx/rules.h"
#include "qx/shapley.h"

namespace {

const qx::Dataset& Pima() {
  static const qx::Dataset data = qx::Dataset::LoadCsv(
      qx::DefaultDataDir() / "pima.csv",
      qx::Schema::Load(qx::DefaultDataDir() / "pima.schema.json"));
  return data;
}

const qx::TrainedModel& Lr() {
  static const qx::TrainedModel m = qx::Train(Pima(), qx::ModelKind::kLogisticRegression, {});
  return m;
}

void BM_ShapleyExact(benchmark::State& state) {
  const auto& m = Lr();
  qx::ModelFn f = [&](std::span<const double> x) { return m.Proba(x); };
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qx::ShapleyAttribution(f, Pima().row(i++ % Pima().rows()), Pima().x()));
  }
}
BENCHMARK(BM_ShapleyExact);

void BM_Protodash(benchmark::State& state) {
  const auto& x = Pima().x();
  qx::Matrix y(x.begin(), x.begin() + 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qx::ProtodashSelect(x, y, state.range(0)));
  }
}
BENCHMARK(BM_Protodash)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Counterfactual(benchmark::State& state) {
  const auto& m = Lr();
  qx::ModelFn f = [&](std::span<const double> x) { return m.Proba(x); };
  auto space = qx::FeatureSpace::FromDataset(Pima());
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qx::CounterfactualSearch(f, Pima().row(i++ % Pima().rows()), space));
  }
}
BENCHMARK(BM_Counterfactual)->Unit(benchmark::kMillisecond);

void BM_TrainTreeAndRules(benchmark::State& state) {
  for (auto _ : state) {
    auto dt = qx::Train(Pima(), qx::ModelKind::kDecisionTree, {});
    benchmark::DoNotOptimize(qx::ExtractRules(dt, Pima().x()));
  }
}
BENCHMARK(BM_TrainTreeAndRules)->Unit(benchmark::kMillisecond);

void BM_TrainLogistic(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(qx::Train(Pima(), qx::ModelKind::kLogisticRegression, {}));
  }
}
BENCHMARK(BM_TrainLogistic)->Unit(benchmark::kMillisecond);

void BM_ParseInterpretation(benchmark::State& state) {
  const auto& schema = Pima().schema();
  for (auto _ : state) {
    benchmark::DoNotOptimize(qx::ParseInterpretation(
        "Predict(Diabetes, Age = 45, Sex = Female, BMI = 27, DiabetesPedigreeFunction = 0.2)",
        schema));
  }
}
BENCHMARK(BM_ParseInterpretation);

void BM_Decompose(benchmark::State& state) {
  static const qx::Registry registry = qx::Registry::LoadDefault();
  qx::PatternDecomposer pd(registry, Pima().schema());
  for (auto _ : state) {
    benchmark::DoNotOptimize(pd.Decompose(
        "How did the model justify predicting Diabetes for a 45-year-old female with a BMI of 27 "
        "and a Diabetes Pedigree Function of 0.2?"));
  }
}
BENCHMARK(BM_Decompose);

}  // namespace

BENCHMARK_MAIN();
