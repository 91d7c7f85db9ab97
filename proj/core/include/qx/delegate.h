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

#ifndef QX_DELEGATE_H_
#define QX_DELEGATE_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/counterfactual.h"
#include "qx/dataset.h"
#include "qx/decompose.h"
#include "qx/interp.h"
#include "qx/metrics.h"
#include "qx/model.h"
#include "qx/registry.h"
#include "qx/run_store.h"
#include "qx/shapley.h"

namespace qx {

struct DelegateConfig {
  // Focus rows explained by the per-instance explainers (attributions).
  size_t max_instances = 5;
  ShapleyConfig shapley;
  size_t prototypes = 3;
  CounterfactualConfig counterfactual;
  // Surrogate tree for rule extraction when the model is not a tree.
  int surrogate_depth = 3;
  size_t surrogate_min_leaf = 5;

  nlohmann::json ToJson() const;
  static DelegateConfig FromJson(const nlohmann::json& j);
};

// One explainer invocation on one feature group.
struct ExplainerResult {
  std::string explainer;
  Modality modality = Modality::kFeatures;
  size_t group_index = 0;
  FeatureGroup group;
  bool ok = false;
  nlohmann::json error;  // {code, message, detail} when !ok
  std::string dir;       // directory name under the run store root
  std::vector<size_t> focus;
  bool approximate = false;
  Table output;  // exactly what output.csv holds
  std::vector<MetricReport> metrics;

  nlohmann::json ToJson() const;  // without the table
};

struct DelegateRun {
  std::string run_id;
  ReframedQuestion rq;
  std::string explanation_type;
  ParsedInterpretation parsed;
  std::vector<FeatureGroup> groups;
  std::vector<ExplainerResult> results;
  std::vector<std::string> warnings;
  std::string status = "ok";  // ok | unsupported
  nlohmann::json dataset;     // {id, hash, source}
  nlohmann::json model;       // {id, kind}
  DelegateConfig config;
  std::string started, finished;  // UTC, record only

  size_t successes() const;
  nlohmann::json ToJson() const;
  // Tables are read back from the store.
  static DelegateRun FromJson(const nlohmann::json& j, const RunStore& store);
};

struct DelegateContext {
  const Registry& registry;
  const Dataset& data;
  const TrainedModel& model;
  RunStore& store;
  nlohmann::json dataset_ref = nlohmann::json::object();
  nlohmann::json model_ref = nlohmann::json::object();
};

// Runs every explainer registered for rq's type on every feature group of
// its interpretation. Groups with no exact match use the closest records
// (tagged approximate). Explainer failures are recorded, not thrown.
// Throws UnknownType, UnusableParse, and UnsupportedExplanationType for a
// type without explainers (after persisting a record that says so; the
// error detail carries the run id).
DelegateRun Delegate(const ReframedQuestion& rq, const DelegateContext& ctx,
                     const DelegateConfig& config = {});

DelegateRun LoadRun(const RunStore& store, std::string_view run_id);

// Recomputes each result's metrics from its persisted output.csv.
std::vector<std::vector<MetricReport>> RecomputeMetrics(const DelegateRun& run,
                                                        const Dataset& data,
                                                        const TrainedModel& model);

struct ParseStats {
  size_t total = 0;
  size_t usable = 0;
  size_t unusable = 0;
  struct TypeCount {
    size_t usable = 0;
    size_t unusable = 0;
  };
  std::map<std::string, TypeCount> per_type;
  std::vector<std::string> unusable_examples;

  nlohmann::json ToJson() const;
};

// Usable = the machine interpretation parses. Every registry type gets an
// entry, zero when absent from the log.
ParseStats ComputeParseStats(const std::vector<ReframedQuestion>& log,
                             const Schema& schema, const Registry& registry);

// Column names of each modality's output.csv (see docs/output-schemas.md).
std::vector<std::string> OutputColumns(Modality m, const std::vector<std::string>& features);

}  // namespace qx

#endif  // QX_DELEGATE_H_
