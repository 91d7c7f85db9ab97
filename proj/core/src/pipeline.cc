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

#include "qx/pipeline.h"

#include <chrono>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

nlohmann::json PipelineConfig::ToJson() const {
  return {{"delegate", delegate.ToJson()},
          {"top_c", top_c},
          {"mode", mode},
          {"llm_decompose", llm_decompose}};
}

PipelineConfig PipelineConfig::FromJson(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("delegate")) c.delegate = DelegateConfig::FromJson(j.at("delegate"));
  c.top_c = j.value("top_c", c.top_c);
  c.mode = j.value("mode", c.mode);
  c.llm_decompose = j.value("llm_decompose", c.llm_decompose);
  if (c.mode != "template" && c.mode != "llm") {
    throw Error(ErrorCode::kInvalidArgument, "mode must be template or llm",
                {{"mode", c.mode}});
  }
  if (c.top_c == 0) throw Error(ErrorCode::kInvalidArgument, "top_c must be positive");
  return c;
}

nlohmann::json AskResponse::ToJson() const {
  return {{"tuple", tuple ? tuple->ToJson() : nlohmann::json(nullptr)},
          {"rendered", tuple ? nlohmann::json(tuple->Render()) : nlohmann::json(nullptr)},
          {"rq", qx::ToJson(rq)},
          {"run_id", run_id},
          {"status", status},
          {"timings_ms", timings_ms},
          {"warnings", warnings},
          {"grounding", grounding ? grounding->ToJson() : nlohmann::json(nullptr)},
          {"config", config}};
}

AskResponse AskResponseFromJson(const nlohmann::json& j) {
  try {
    AskResponse r;
    if (!j.at("tuple").is_null()) r.tuple = ExplanationTuple::FromJson(j.at("tuple"));
    r.rq = ReframedQuestionFromJson(j.at("rq"));
    r.run_id = j.at("run_id");
    r.status = j.at("status");
    r.timings_ms = j.value("timings_ms", nlohmann::json::object());
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.config = j.value("config", nlohmann::json::object());
    if (j.contains("grounding") && !j.at("grounding").is_null()) {
      const auto& g = j.at("grounding");
      GroundingReport rep;
      rep.score = g.at("score");
      rep.tokens = g.at("tokens").get<std::vector<std::string>>();
      rep.flagged = g.at("flagged").get<std::vector<std::string>>();
      r.grounding = rep;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed response: ") + e.what());
  }
}

nlohmann::json ReplayResult::ToJson() const {
  return {{"original", original.ToJson()},
          {"replay", replay.ToJson()},
          {"identical", identical},
          {"differences", differences}};
}

namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

Pipeline::Pipeline(const Registry& registry, const Dataset& data, const TrainedModel& model,
                   RunStore& store, PipelineConfig config, nlohmann::json dataset_ref,
                   nlohmann::json model_ref, const PatternDecomposer* decomposer)
    : registry_(registry),
      data_(data),
      model_(model),
      store_(store),
      config_(std::move(config)),
      dataset_ref_(std::move(dataset_ref)),
      model_ref_(std::move(model_ref)),
      decomposer_(decomposer) {
  if (!decomposer_) {
    owned_ = std::make_unique<PatternDecomposer>(registry_, data_.schema());
    decomposer_ = owned_.get();
  }
  if (model_ref_.empty()) {
    model_ref_ = {{"id", model_.Id()}, {"kind", std::string(ModelKindName(model_.kind))}};
  }
  if (dataset_ref_.empty()) {
    dataset_ref_ = {{"hash", data_.hash()}, {"source", data_.source()}};
  }
}

ReframedQuestion Pipeline::Decompose(std::string_view question) const {
  if (config_.llm_decompose && config_.llm.configured()) {
    return LlmDecompose(question, config_.llm, *decomposer_);
  }
  return decomposer_->Decompose(question);
}

AskResponse Pipeline::Ask(std::string_view question) const {
  auto t0 = Clock::now();
  ReframedQuestion rq = Decompose(question);
  double decompose_ms = Ms(t0);
  AskResponse r = Run(rq, config_);
  r.timings_ms["decompose"] = decompose_ms;
  r.timings_ms["total"] = Ms(t0);
  if (!r.run_id.empty()) {
    WriteFile(store_.RecordDir(r.run_id) / "response.json", r.ToJson().dump(2) + "\n");
  }
  return r;
}

AskResponse Pipeline::AskReframed(const ReframedQuestion& rq) const {
  auto t0 = Clock::now();
  AskResponse r = Run(rq, config_);
  r.timings_ms["total"] = Ms(t0);
  if (!r.run_id.empty()) {
    WriteFile(store_.RecordDir(r.run_id) / "response.json", r.ToJson().dump(2) + "\n");
  }
  return r;
}

AskResponse Pipeline::Run(const ReframedQuestion& rq, const PipelineConfig& config) const {
  AskResponse r;
  r.rq = rq;
  r.config = config.ToJson();
  if (!registry_.FindType(rq.explanation_type)) {
    r.status = "unknown_type";
    r.warnings.push_back("could not determine an explanation type for the question ('" +
                         rq.explanation_type + "'); no explainer was run");
    return r;
  }
  DelegateContext ctx{registry_, data_, model_, store_, dataset_ref_, model_ref_};
  auto t0 = Clock::now();
  DelegateRun run;
  try {
    run = Delegate(rq, ctx, config.delegate);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnsupportedExplanationType) throw;
    r.status = "unsupported";
    r.run_id = e.detail().value("run_id", "");
    r.warnings.push_back(std::string("unsupported explanation type '") + rq.explanation_type +
                         "': " + e.what());
    r.timings_ms["delegate"] = Ms(t0);
    return r;
  }
  r.timings_ms["delegate"] = Ms(t0);
  r.run_id = run.run_id;
  r.warnings = run.warnings;

  auto t1 = Clock::now();
  ExplanationTuple tuple;
  try {
    tuple = config.mode == "llm"
                ? LlmSynthesize(run, registry_, data_.schema(), config.llm, config.top_c)
                : Synthesize(run, registry_, data_.schema(), config.top_c);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoOutputs && e.code() != ErrorCode::kTemplateSlotUnfillable) {
      throw;
    }
    r.warnings.push_back(std::string("no explanation: ") + e.what());
    r.timings_ms["synthesize"] = Ms(t1);
    return r;
  }
  r.timings_ms["synthesize"] = Ms(t1);
  if (tuple.mode == "llm-fallback") {
    r.warnings.push_back("LLM synthesis unavailable; used the template");
  }
  r.grounding = LexicalGroundingScore(tuple, run, store_);
  auto dir = store_.RecordDir(run.run_id);
  WriteFile(dir / "explanation.json", tuple.ToJson().dump(2) + "\n");
  WriteFile(dir / "explanation.txt", tuple.Render() + "\n");
  r.tuple = std::move(tuple);
  return r;
}

AskResponse Pipeline::Load(std::string_view run_id) const {
  if (!store_.HasRecord(run_id)) {
    throw Error(ErrorCode::kNotFound, "unknown run '" + std::string(run_id) + "'");
  }
  auto path = store_.RecordDir(run_id) / "response.json";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kNotFound, "run '" + std::string(run_id) + "' has no response");
  }
  return AskResponseFromJson(nlohmann::json::parse(ReadFile(path)));
}

ReplayResult Pipeline::Replay(std::string_view run_id) const {
  ReplayResult out;
  out.original = Load(run_id);
  nlohmann::json record = store_.ReadRecord(run_id);
  PipelineConfig cfg = config_;
  if (!out.original.config.empty()) {
    auto stored = PipelineConfig::FromJson(out.original.config);
    cfg.top_c = stored.top_c;
    cfg.mode = stored.mode;
  }
  cfg.delegate = DelegateConfig::FromJson(record.value("config", nlohmann::json::object()));
  auto t0 = Clock::now();
  out.replay = Run(out.original.rq, cfg);
  out.replay.timings_ms["total"] = Ms(t0);
  if (!out.replay.run_id.empty()) {
    WriteFile(store_.RecordDir(out.replay.run_id) / "response.json",
              out.replay.ToJson().dump(2) + "\n");
  }

  auto& diff = out.differences;
  if (out.original.status != out.replay.status) {
    diff.push_back("status: " + out.original.status + " vs " + out.replay.status);
  }
  if (out.original.warnings != out.replay.warnings) diff.push_back("warnings differ");
  if (out.original.tuple.has_value() != out.replay.tuple.has_value()) {
    diff.push_back("only one side produced an explanation");
  } else if (out.original.tuple && !out.original.tuple->SameContent(*out.replay.tuple)) {
    diff.push_back("explanation tuple differs");
  }
  if (out.original.status == "ok" && out.replay.status == "ok") {
    DelegateRun a = LoadRun(store_, out.original.run_id);
    DelegateRun b = LoadRun(store_, out.replay.run_id);
    if (a.results.size() != b.results.size()) {
      diff.push_back("different number of explainer results");
    } else {
      for (size_t i = 0; i < a.results.size(); ++i) {
        const auto& x = a.results[i];
        const auto& y = b.results[i];
        if (x.explainer != y.explainer || x.ok != y.ok ||
            x.output.ToCsv() != y.output.ToCsv()) {
          diff.push_back("output of " + x.explainer + " (group " +
                         std::to_string(x.group_index) + ") differs");
        }
      }
    }
  }
  out.identical = diff.empty();
  return out;
}

}  // namespace qx
