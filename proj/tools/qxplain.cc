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

// qxplain: command-line front end to the explanation pipeline.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qx/common.h"
#include "qx/dataset.h"
#include "qx/decompose.h"
#include "qx/decompose_eval.h"
#include "qx/delegate.h"
#include "qx/error.h"
#include "qx/interp.h"
#include "qx/llm_client.h"
#include "qx/model.h"
#include "qx/pipeline.h"
#include "qx/question_bank.h"
#include "qx/registry.h"
#include "qx/service.h"
#include "qx/synthesis.h"

namespace {

using nlohmann::json;

// Options shared by every command that needs data, a model or a run store.
struct Common {
  std::string dataset;
  std::string schema;
  std::string model = "lr";
  std::string registry;
  std::string runs = "runs";
  uint64_t seed = 42;
};

void AddDataOptions(CLI::App* cmd, Common& c) {
  cmd->add_option("--dataset", c.dataset, "CSV file (default: bundled PIMA data)");
  cmd->add_option("--schema", c.schema, "schema JSON (default: bundled PIMA schema)");
  cmd->add_option("--registry", c.registry, "registry file (default: bundled)");
}

void AddModelOptions(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model, "model JSON file, or lr|dt|rf to train one")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "split seed when training")->capture_default_str();
}

qx::Registry LoadRegistry(const Common& c) {
  return c.registry.empty() ? qx::Registry::LoadDefault() : qx::Registry::Load(c.registry);
}

qx::Schema LoadSchema(const Common& c) {
  return qx::Schema::Load(c.schema.empty() ? qx::DefaultDataDir() / "pima.schema.json"
                                           : std::filesystem::path(c.schema));
}

qx::Dataset LoadData(const Common& c) {
  return qx::Dataset::LoadCsv(
      c.dataset.empty() ? qx::DefaultDataDir() / "pima.csv" : std::filesystem::path(c.dataset),
      LoadSchema(c));
}

qx::TrainedModel LoadModel(const Common& c, const qx::Dataset& data) {
  if (auto kind = qx::ModelKindFromName(c.model); kind && !std::filesystem::exists(c.model)) {
    qx::TrainConfig cfg;
    cfg.seed = c.seed;
    return qx::Train(data, *kind, cfg);
  }
  auto m = qx::TrainedModel::Load(c.model);
  if (m.dataset_hash != data.hash()) {
    std::cerr << "warning: model was trained on a different dataset (hash "
              << m.dataset_hash.substr(0, 12) << ")\n";
  }
  return m;
}

void PrintJson(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string ReadQuestion(const std::string& flag) {
  if (!flag.empty()) return flag;
  std::string all, line;
  while (std::getline(std::cin, line)) all += (all.empty() ? "" : " ") + line;
  if (qx::Trim(all).empty()) {
    throw qx::Error(qx::ErrorCode::kInvalidArgument, "no question given (--question or stdin)");
  }
  return qx::Trim(all);
}

qx::Service* g_service = nullptr;

void OnSignal(int) {
  if (g_service) g_service->Stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qxplain: question-driven explanations for tabular models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QX_VERSION);
  Common c;

  // gen-qb
  auto* gen = app.add_subcommand("gen-qb", "generate a gold-annotated question bank");
  uint64_t qb_seed = 7;
  size_t per_type = 0;
  std::string qb_out;
  gen->add_option("--seed", qb_seed, "generator seed")->capture_default_str();
  gen->add_option("--per-type", per_type, "questions per type (default: standard 279-entry mix)");
  gen->add_option("-o,--out", qb_out, "TSV output file (default: stdout)");
  AddDataOptions(gen, c);

  // decompose
  auto* dec = app.add_subcommand("decompose", "reframe a question (type, interpretation, action)");
  std::string question;
  bool use_llm = false;
  dec->add_option("-q,--question", question, "question text (default: stdin)");
  dec->add_flag("--llm", use_llm, "use the LLM endpoint from LLM_* variables");
  AddDataOptions(dec, c);

  // parse-interp
  auto* parse = app.add_subcommand(
      "parse-interp", "parse interpretations, one per stdin line, to JSON lines");
  AddDataOptions(parse, c);

  // train
  auto* train = app.add_subcommand("train", "train a model on the dataset");
  std::string kind = "lr", model_out;
  train->add_option("--kind", kind, "lr | dt | rf")->capture_default_str();
  train->add_option("--seed", c.seed, "split seed")->capture_default_str();
  train->add_option("-o,--out", model_out, "model JSON output");
  AddDataOptions(train, c);

  // delegate
  auto* del = app.add_subcommand("delegate", "run the registered explainers for a question");
  std::string rq_file;
  del->add_option("-q,--question", question, "question text");
  del->add_option("--rq", rq_file, "reframed question JSON instead of a question");
  del->add_option("--runs", c.runs, "run store directory")->capture_default_str();
  AddDataOptions(del, c);
  AddModelOptions(del, c);

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "build the explanation for a stored run");
  std::string run_id, mode = "template";
  size_t top_c = qx::kDefaultTopC;
  syn->add_option("--run", run_id, "run id")->required();
  syn->add_option("--runs", c.runs, "run store directory")->capture_default_str();
  syn->add_option("--mode", mode, "template | llm")->capture_default_str();
  syn->add_option("--top-c", top_c, "items per slot")->capture_default_str();
  AddDataOptions(syn, c);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "question -> explanation, end to end");
  std::string format = "both";
  pipe->add_option("-q,--question", question, "question text (default: stdin)");
  pipe->add_option("--runs", c.runs, "run store directory")->capture_default_str();
  pipe->add_option("--mode", mode, "template | llm")->capture_default_str();
  pipe->add_option("--top-c", top_c, "items per slot")->capture_default_str();
  pipe->add_option("--format", format, "json | text | both")->capture_default_str();
  pipe->add_flag("--llm-decompose", use_llm, "decompose with the LLM endpoint");
  AddDataOptions(pipe, c);
  AddModelOptions(pipe, c);

  // replay
  auto* rep = app.add_subcommand("replay", "re-run a stored run and compare");
  rep->add_option("--run", run_id, "run id")->required();
  rep->add_option("--runs", c.runs, "run store directory")->capture_default_str();
  AddDataOptions(rep, c);
  AddModelOptions(rep, c);

  // eval-decompose
  auto* ev = app.add_subcommand("eval-decompose", "score the decomposer on a question bank");
  std::string bank_file, report_out;
  double test_fraction = 0.0;
  ev->add_option("--bank", bank_file, "bank TSV (default: generate the standard bank)");
  ev->add_option("--seed", qb_seed, "bank generator / split seed")->capture_default_str();
  ev->add_option("--test-fraction", test_fraction,
                 "evaluate on a stratified held-out split of this size (0 = whole bank)");
  ev->add_option("-o,--out", report_out, "report JSON file");
  ev->add_flag("--llm", use_llm, "use the LLM endpoint from LLM_* variables");
  AddDataOptions(ev, c);

  // metrics
  auto* met = app.add_subcommand("metrics", "recompute a run's metrics from its outputs");
  met->add_option("--run", run_id, "run id")->required();
  met->add_option("--runs", c.runs, "run store directory")->capture_default_str();
  AddDataOptions(met, c);
  AddModelOptions(met, c);

  // serve
  auto* srv = app.add_subcommand("serve", "HTTP service under /v1");
  std::optional<int> port;
  std::string host, data_root, config_file;
  srv->add_option("--port", port, "port (default: QX_PORT or 8080; 0 = any)");
  srv->add_option("--host", host, "bind address (default: QX_HOST or 127.0.0.1)");
  srv->add_option("--data-root", data_root, "datasets, models and runs (default: QX_DATA_ROOT)");
  srv->add_option("--config", config_file, "JSON config file overriding the environment");
  AddDataOptions(srv, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto schema = LoadSchema(c);
      auto registry = LoadRegistry(c);
      auto bank = per_type ? qx::GenerateQuestionBank(schema, registry, per_type, qb_seed)
                           : qx::GenerateQuestionBank(schema, registry,
                                                      qx::DefaultBankCounts(), qb_seed);
      std::string tsv = qx::BankToTsv(bank);
      if (qb_out.empty()) {
        std::cout << tsv;
      } else {
        qx::WriteFile(qb_out, tsv);
        std::cerr << bank.size() << " questions written to " << qb_out << "\n";
      }
    } else if (*dec) {
      auto schema = LoadSchema(c);
      auto registry = LoadRegistry(c);
      qx::PatternDecomposer pd(registry, schema);
      std::string q = ReadQuestion(question);
      auto rq = use_llm ? qx::LlmDecompose(q, qx::LlmEndpoint::FromEnv(), pd) : pd.Decompose(q);
      PrintJson(qx::ToJson(rq));
    } else if (*parse) {
      auto schema = LoadSchema(c);
      bool failed = false;
      std::string line;
      while (std::getline(std::cin, line)) {
        if (qx::Trim(line).empty()) continue;
        try {
          std::cout << qx::ToJson(qx::ParseInterpretation(line, schema)).dump() << "\n";
        } catch (const qx::Error& e) {
          failed = true;
          std::cout << json{{"input", line}, {"error", e.ToJson()}}.dump() << "\n";
          std::cerr << e.ToJson().dump() << "\n";
        }
      }
      return failed ? 2 : 0;
    } else if (*train) {
      auto data = LoadData(c);
      auto k = qx::ModelKindFromName(kind);
      if (!k) throw qx::Error(qx::ErrorCode::kInvalidArgument, "unknown model kind '" + kind + "'");
      qx::TrainConfig cfg;
      cfg.seed = c.seed;
      auto m = qx::Train(data, *k, cfg);
      if (!model_out.empty()) m.Save(model_out);
      PrintJson({{"model_id", m.Id()},
                 {"kind", std::string(qx::ModelKindName(m.kind))},
                 {"n_train", m.n_train},
                 {"n_test", m.n_test},
                 {"converged", m.converged},
                 {"iterations", m.iterations},
                 {"report", m.report.ToJson()}});
    } else if (*del) {
      auto registry = LoadRegistry(c);
      auto data = LoadData(c);
      auto model = LoadModel(c, data);
      qx::RunStore store(c.runs);
      qx::ReframedQuestion rq;
      if (!rq_file.empty()) {
        rq = qx::ReframedQuestionFromJson(json::parse(qx::ReadFile(rq_file)));
      } else {
        rq = qx::PatternDecomposer(registry, data.schema()).Decompose(ReadQuestion(question));
      }
      qx::DelegateContext ctx{registry, data, model, store,
                              {{"hash", data.hash()}, {"source", data.source()}},
                              {{"id", model.Id()}, {"kind", std::string(qx::ModelKindName(model.kind))}}};
      PrintJson(qx::Delegate(rq, ctx).ToJson());
    } else if (*syn) {
      auto registry = LoadRegistry(c);
      auto schema = LoadSchema(c);
      qx::RunStore store(c.runs);
      auto run = qx::LoadRun(store, run_id);
      auto tuple = mode == "llm"
                       ? qx::LlmSynthesize(run, registry, schema, qx::LlmEndpoint::FromEnv(), top_c)
                       : qx::Synthesize(run, registry, schema, top_c);
      PrintJson(tuple.ToJson());
      std::cout << "\n" << tuple.Render() << "\n";
    } else if (*pipe) {
      auto registry = LoadRegistry(c);
      auto data = LoadData(c);
      auto model = LoadModel(c, data);
      qx::RunStore store(c.runs);
      qx::PipelineConfig cfg;
      cfg.mode = mode;
      cfg.top_c = top_c;
      cfg.llm_decompose = use_llm;
      cfg = qx::PipelineConfig::FromJson(cfg.ToJson());
      cfg.llm = qx::LlmEndpoint::FromEnv();
      qx::Pipeline p(registry, data, model, store, cfg);
      auto r = p.Ask(ReadQuestion(question));
      if (format != "text") PrintJson(r.ToJson());
      if (format != "json") {
        if (format == "both") std::cout << "\n";
        std::cout << (r.tuple ? r.tuple->Render() : std::string("(no explanation)")) << "\n";
        for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
      }
    } else if (*rep) {
      auto registry = LoadRegistry(c);
      auto data = LoadData(c);
      auto model = LoadModel(c, data);
      qx::RunStore store(c.runs);
      qx::Pipeline p(registry, data, model, store);
      auto r = p.Replay(run_id);
      PrintJson(r.ToJson());
      return r.identical ? 0 : 3;
    } else if (*ev) {
      auto schema = LoadSchema(c);
      auto registry = LoadRegistry(c);
      auto bank = bank_file.empty()
                      ? qx::GenerateQuestionBank(schema, registry, qx::DefaultBankCounts(), qb_seed)
                      : qx::BankFromTsv(qx::ReadFile(bank_file));
      if (test_fraction > 0) bank = qx::StratifiedSplit(bank, test_fraction, qb_seed).test;
      qx::PatternDecomposer pd(registry, schema);
      auto endpoint = qx::LlmEndpoint::FromEnv();
      std::vector<qx::ReframedQuestion> predicted;
      auto report = qx::EvaluateDecomposer(bank, [&](const std::string& q) {
        auto rq = use_llm ? qx::LlmDecompose(q, endpoint, pd) : pd.Decompose(q);
        predicted.push_back(rq);
        return rq;
      });
      json j = report.ToJson();
      j["parse_stats"] = qx::ComputeParseStats(predicted, schema, registry).ToJson();
      if (!report_out.empty()) {
        qx::WriteFile(report_out, j.dump(2) + "\n");
        qx::WriteFile(std::filesystem::path(report_out).replace_extension(".txt"),
                      report.ConfusionTable());
      }
      std::cout << report.ConfusionTable();
    } else if (*met) {
      auto data = LoadData(c);
      auto model = LoadModel(c, data);
      qx::RunStore store(c.runs);
      auto run = qx::LoadRun(store, run_id);
      auto recomputed = qx::RecomputeMetrics(run, data, model);
      json out = json::array();
      bool all_equal = true;
      for (size_t i = 0; i < run.results.size(); ++i) {
        json stored = json::array(), fresh = json::array();
        for (const auto& m : run.results[i].metrics) stored.push_back(m.ToJson());
        for (const auto& m : recomputed[i]) fresh.push_back(m.ToJson());
        bool equal = stored == fresh;
        all_equal = all_equal && equal;
        out.push_back({{"explainer", run.results[i].explainer},
                       {"dir", run.results[i].dir},
                       {"metrics", fresh},
                       {"matches_stored", equal}});
      }
      PrintJson(out);
      return all_equal ? 0 : 3;
    } else if (*srv) {
      auto cfg = qx::ServiceConfig::FromEnv();
      if (!config_file.empty()) cfg = qx::ServiceConfig::FromFile(config_file, cfg);
      if (port) cfg.port = *port;
      if (!host.empty()) cfg.host = host;
      if (!data_root.empty()) cfg.data_root = data_root;
      qx::Service service(cfg, LoadRegistry(c));
      service.LoadDefaults();
      g_service = &service;
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      int bound = service.Start();
      std::cerr << "qxplain listening on http://" << cfg.host << ":" << bound << "/v1 (dataset "
                << service.default_dataset() << ", model " << service.default_model() << ")\n";
      service.Serve();
    }
  } catch (const qx::Error& e) {
    std::cerr << e.ToJson().dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"code", "Internal"}, {"message", e.what()}, {"detail", json::object()}}.dump()
              << "\n";
    return 1;
  }
  return 0;
}
