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

#ifndef QX_PIPELINE_H_
#define QX_PIPELINE_H_

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/dataset.h"
#include "qx/decompose.h"
#include "qx/delegate.h"
#include "qx/llm_client.h"
#include "qx/model.h"
#include "qx/registry.h"
#include "qx/run_store.h"
#include "qx/synthesis.h"

namespace qx {

struct PipelineConfig {
  DelegateConfig delegate;
  size_t top_c = kDefaultTopC;
  std::string mode = "template";  // template | llm
  bool llm_decompose = false;
  LlmEndpoint llm;  // never serialized (api key)

  nlohmann::json ToJson() const;
  static PipelineConfig FromJson(const nlohmann::json& j);
};

struct AskResponse {
  std::optional<ExplanationTuple> tuple;
  ReframedQuestion rq;
  std::string run_id;         // empty when no run was made (unknown type)
  std::string status = "ok";  // ok | unsupported | unknown_type
  nlohmann::json timings_ms = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::optional<GroundingReport> grounding;
  nlohmann::json config = nlohmann::json::object();  // PipelineConfig used

  nlohmann::json ToJson() const;
};

struct ReplayResult {
  AskResponse original;
  AskResponse replay;
  bool identical = false;
  std::vector<std::string> differences;

  nlohmann::json ToJson() const;
};

// Question -> reframed question -> explainer runs -> explanation tuple.
// Every run leaves records/<run_id>/{run.json, response.json} and, when a
// tuple was produced, explanation.{json,txt}.
class Pipeline {
 public:
  Pipeline(const Registry& registry, const Dataset& data, const TrainedModel& model,
           RunStore& store, PipelineConfig config = {},
           nlohmann::json dataset_ref = nlohmann::json::object(),
           nlohmann::json model_ref = nlohmann::json::object(),
           const PatternDecomposer* decomposer = nullptr);

  ReframedQuestion Decompose(std::string_view question) const;
  AskResponse Ask(std::string_view question) const;
  // UnknownType and UnsupportedExplanationType become warnings; UnusableParse
  // propagates.
  AskResponse AskReframed(const ReframedQuestion& rq) const;
  // Re-runs a stored run's reframed question with its stored delegate config
  // and compares the outputs and tuple with the stored ones.
  ReplayResult Replay(std::string_view run_id) const;
  // The stored response of a run.
  AskResponse Load(std::string_view run_id) const;

  const PipelineConfig& config() const { return config_; }

 private:
  AskResponse Run(const ReframedQuestion& rq, const PipelineConfig& config) const;

  const Registry& registry_;
  const Dataset& data_;
  const TrainedModel& model_;
  RunStore& store_;
  PipelineConfig config_;
  nlohmann::json dataset_ref_, model_ref_;
  std::unique_ptr<PatternDecomposer> owned_;
  const PatternDecomposer* decomposer_;
};

AskResponse AskResponseFromJson(const nlohmann::json& j);

}  // namespace qx

#endif  // QX_PIPELINE_H_
