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

#include "qx/service.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "httplib.h"
#include "qx/common.h"
#include "qx/dataset.h"
#include "qx/decompose.h"
#include "qx/interp.h"
#include "qx/model.h"
#include "qx/pipeline.h"
#include "qx/run_store.h"

namespace qx {

ServiceConfig ServiceConfig::FromEnv() {
  ServiceConfig c;
  if (const char* v = std::getenv("QX_HOST")) c.host = v;
  if (const char* v = std::getenv("QX_PORT")) {
    auto p = ParseDouble(v);
    if (!p || *p < 0 || *p > 65535) {
      throw Error(ErrorCode::kInvalidArgument, "QX_PORT is not a port number", {{"value", v}});
    }
    c.port = static_cast<int>(*p);
  }
  if (const char* v = std::getenv("QX_DATA_ROOT")) c.data_root = v;
  if (const char* v = std::getenv("QX_API_TOKEN")) c.api_token = v;
  if (const char* v = std::getenv("QX_CORS_ORIGIN")) c.cors_origin = v;
  c.llm = LlmEndpoint::FromEnv();
  return c;
}

ServiceConfig ServiceConfig::FromFile(const std::filesystem::path& path, ServiceConfig c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    c.api_token = j.value("api_token", c.api_token);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    c.threads = j.value("threads", c.threads);
    if (j.contains("llm")) {
      const auto& l = j.at("llm");
      c.llm.base_url = l.value("base_url", c.llm.base_url);
      c.llm.model = l.value("model", c.llm.model);
      c.llm.timeout_seconds = l.value("timeout_seconds", c.llm.timeout_seconds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "bad service config " + path.string() + ": " + e.what());
  }
  return c;
}

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnusableParse:
      return 422;
    case ErrorCode::kSingleClassData:
      return 409;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kEndpointError:
      return 502;
    case ErrorCode::kIoError:
      return 500;
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kTypeMismatch:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kImputationError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidBandwidth:
    case ErrorCode::kUnknownType:
    case ErrorCode::kUnsupportedType:
      return 400;
    default:
      return 422;
  }
}

namespace {

struct DatasetEntry {
  std::string id;
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const PatternDecomposer> decomposer;
};

struct ModelEntry {
  std::string id;
  std::string dataset_id;
  std::shared_ptr<const TrainedModel> model;
};

HttpResponse Json(int status, const nlohmann::json& j) {
  return {status, j.dump(2) + "\n", "application/json"};
}

HttpResponse ErrorResponse(const Error& e) { return Json(HttpStatusFor(e.code()), e.ToJson()); }

nlohmann::json ParseBody(std::string_view body) {
  if (Trim(body).empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::kParseError, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("request body is not JSON: ") + e.what());
  }
}

std::string Field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

bool SafeId(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  });
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  Registry registry;
  std::unique_ptr<RunStore> store;
  mutable std::shared_mutex mu;
  mutable std::map<std::string, DatasetEntry> datasets;
  mutable std::map<std::string, ModelEntry> models;
  std::string default_dataset, default_model;
  httplib::Server server;
  std::thread thread;

  std::filesystem::path DatasetDir(const std::string& id) const {
    return config.data_root / "datasets" / id;
  }
  std::filesystem::path ModelPath(const std::string& id) const {
    return config.data_root / "models" / (id + ".json");
  }

  DatasetEntry RegisterDataset(const std::string& csv, const Schema& schema,
                               const std::string& source) const {
    std::string id = Sha256Hex(csv + "\n" + schema.ToJson().dump()).substr(0, 16);
    {
      std::shared_lock lock(mu);
      if (auto it = datasets.find(id); it != datasets.end()) return it->second;
    }
    auto data = std::make_shared<const Dataset>(
        Dataset::FromCsvText(csv, schema, std::nullopt, source));
    DatasetEntry e{id, data, std::make_shared<const PatternDecomposer>(registry, schema)};
    std::unique_lock lock(mu);
    if (auto it = datasets.find(id); it != datasets.end()) return it->second;
    auto dir = DatasetDir(id);
    if (!std::filesystem::exists(dir / "data.csv")) {
      WriteFile(dir / "data.csv", csv);
      WriteFile(dir / "schema.json", schema.ToJson().dump(2) + "\n");
      WriteFile(dir / "source.txt", source + "\n");
    }
    datasets.emplace(id, e);
    return e;
  }

  DatasetEntry GetDataset(const std::string& id) const {
    {
      std::shared_lock lock(mu);
      if (auto it = datasets.find(id); it != datasets.end()) return it->second;
    }
    auto dir = DatasetDir(id);
    if (!SafeId(id) || !std::filesystem::exists(dir / "data.csv")) {
      throw Error(ErrorCode::kNotFound, "unknown dataset '" + id + "'", {{"dataset_id", id}});
    }
    std::string source = std::filesystem::exists(dir / "source.txt")
                             ? Trim(ReadFile(dir / "source.txt"))
                             : (dir / "data.csv").string();
    return RegisterDataset(ReadFile(dir / "data.csv"), Schema::Load(dir / "schema.json"), source);
  }

  ModelEntry RegisterModel(const std::string& dataset_id, TrainedModel model) const {
    std::string id = model.Id();
    std::unique_lock lock(mu);
    if (auto it = models.find(id); it != models.end()) return it->second;
    if (!std::filesystem::exists(ModelPath(id))) {
      model.Save(ModelPath(id));
      WriteFile(config.data_root / "models" / (id + ".dataset"), dataset_id + "\n");
    }
    ModelEntry e{id, dataset_id, std::make_shared<const TrainedModel>(std::move(model))};
    models.emplace(id, e);
    return e;
  }

  ModelEntry GetModel(const std::string& id) const {
    {
      std::shared_lock lock(mu);
      if (auto it = models.find(id); it != models.end()) return it->second;
    }
    auto ds = config.data_root / "models" / (id + ".dataset");
    if (!SafeId(id) || !std::filesystem::exists(ModelPath(id)) || !std::filesystem::exists(ds)) {
      throw Error(ErrorCode::kNotFound, "unknown model '" + id + "'", {{"model_id", id}});
    }
    return RegisterModel(Trim(ReadFile(ds)), TrainedModel::Load(ModelPath(id)));
  }

  // Resolves the (dataset, model) pair of a request, defaults filled in.
  std::pair<DatasetEntry, ModelEntry> Resolve(const nlohmann::json& req) const {
    std::string model_id = req.value("model_id", "");
    std::string dataset_id = req.value("dataset_id", "");
    if (model_id.empty()) {
      if (!dataset_id.empty() && dataset_id != default_dataset) {
        throw Error(ErrorCode::kInvalidArgument,
                    "model_id is required for a non-default dataset");
      }
      model_id = default_model;
    }
    if (model_id.empty()) throw Error(ErrorCode::kNotFound, "no default model is loaded");
    ModelEntry m = GetModel(model_id);
    if (dataset_id.empty()) dataset_id = m.dataset_id;
    if (dataset_id != m.dataset_id) {
      throw Error(ErrorCode::kInvalidArgument, "model was not trained on this dataset",
                  {{"model_id", model_id}, {"dataset_id", dataset_id},
                   {"model_dataset_id", m.dataset_id}});
    }
    return {GetDataset(dataset_id), m};
  }

  Pipeline MakePipeline(const DatasetEntry& d, const ModelEntry& m, PipelineConfig cfg) const {
    cfg.llm = config.llm;
    nlohmann::json dref = {{"id", d.id}, {"hash", d.data->hash()}, {"source", d.data->source()}};
    nlohmann::json mref = {{"id", m.id},
                           {"kind", std::string(ModelKindName(m.model->kind))},
                           {"dataset_id", m.dataset_id}};
    return Pipeline(registry, *d.data, *m.model, *store, std::move(cfg), dref, mref,
                    d.decomposer.get());
  }

  HttpResponse Route(std::string_view method, std::string_view path, std::string_view body) const;
};

Service::Service(ServiceConfig config, Registry registry) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->registry = std::move(registry);
  std::filesystem::create_directories(impl_->config.data_root / "models");
  std::filesystem::create_directories(impl_->config.data_root / "datasets");
  impl_->store = std::make_unique<RunStore>(impl_->config.data_root / "runs");
}

Service::~Service() {
  Stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

const ServiceConfig& Service::config() const { return impl_->config; }
const std::string& Service::default_dataset() const { return impl_->default_dataset; }
const std::string& Service::default_model() const { return impl_->default_model; }

void Service::LoadDefaults() {
  auto dir = DefaultDataDir();
  Schema schema = Schema::Load(dir / "pima.schema.json");
  auto d = impl_->RegisterDataset(ReadFile(dir / "pima.csv"), schema, "pima.csv");
  auto m = impl_->RegisterModel(d.id, Train(*d.data, ModelKind::kLogisticRegression, {}));
  impl_->default_dataset = d.id;
  impl_->default_model = m.id;
}

HttpResponse Service::Handle(std::string_view method, std::string_view path,
                             std::string_view body,
                             const std::map<std::string, std::string>& headers) const {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  if (method == "OPTIONS") return {204, "", "text/plain"};
  try {
    if (!impl_->config.api_token.empty() && path != "/v1/health") {
      std::string auth;
      for (const auto& [k, v] : headers) {
        if (ToLower(k) == "authorization") auth = v;
      }
      if (auth != "Bearer " + impl_->config.api_token) {
        throw Error(ErrorCode::kUnauthorized, "missing or wrong API token");
      }
    }
    return impl_->Route(method, path, body);
  } catch (const Error& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return Json(500, Error(ErrorCode::kIoError, e.what()).ToJson());
  }
}

HttpResponse Service::Impl::Route(std::string_view method, std::string_view path,
                                  std::string_view body) const {
  if (!StartsWith(path, "/v1/")) {
    throw Error(ErrorCode::kNotFound, "no such endpoint (all endpoints live under /v1)",
                {{"path", std::string(path)}});
  }
  auto parts = Split(path.substr(4), '/');
  const std::string& head = parts.at(0);
  const bool get = method == "GET", post = method == "POST";

  if (get && head == "health" && parts.size() == 1) {
    return Json(200, {{"status", "ok"},
                      {"name", "qxplain"},
                      {"version", QX_VERSION},
                      {"build", __DATE__},
                      {"default_dataset", default_dataset},
                      {"default_model", default_model}});
  }
  if (get && head == "registry" && parts.size() == 1) return Json(200, registry.ToJson());

  if (head == "datasets" && parts.size() == 1 && post) {
    nlohmann::json req;
    std::string csv;
    Schema schema;
    if (!body.empty() && body.front() == '{') {
      req = ParseBody(body);
      csv = Field(req, "csv");
      if (req.contains("schema")) {
        schema = Schema::FromJson(req.at("schema"));
      } else {
        schema = Schema::Load(DefaultDataDir() / "pima.schema.json");
      }
    } else {
      csv = std::string(body);
      schema = Schema::Load(DefaultDataDir() / "pima.schema.json");
    }
    auto e = RegisterDataset(csv, schema, req.value("name", "upload"));
    return Json(200, {{"dataset_id", e.id},
                      {"rows", e.data->rows()},
                      {"hash", e.data->hash()},
                      {"imputation", e.data->ImputationSummary()}});
  }
  if (head == "datasets" && parts.size() == 1 && get) {
    std::shared_lock lock(mu);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, e] : datasets) {
      out.push_back({{"dataset_id", id}, {"rows", e.data->rows()}, {"source", e.data->source()}});
    }
    return Json(200, out);
  }
  if (head == "models" && parts.size() == 1 && post) {
    auto req = ParseBody(body);
    auto d = GetDataset(Field(req, "dataset_id"));
    auto kind = ModelKindFromName(req.value("kind", "lr"));
    if (!kind) {
      throw Error(ErrorCode::kInvalidArgument, "unknown model kind",
                  {{"kind", req.value("kind", "")}});
    }
    TrainConfig cfg = TrainConfig::FromJson(req.value("config", nlohmann::json::object()));
    auto m = RegisterModel(d.id, Train(*d.data, *kind, cfg));
    return Json(200, {{"model_id", m.id},
                      {"dataset_id", d.id},
                      {"kind", std::string(ModelKindName(m.model->kind))},
                      {"report", m.model->report.ToJson()}});
  }
  if (head == "models" && parts.size() == 2 && get) {
    auto m = GetModel(parts[1]);
    auto j = m.model->ToJson();
    j["model_id"] = m.id;
    j["dataset_id"] = m.dataset_id;
    return Json(200, j);
  }
  if (head == "ask" && parts.size() == 1 && post) {
    auto req = ParseBody(body);
    auto [d, m] = Resolve(req);
    PipelineConfig cfg;
    cfg.mode = req.value("mode", "template");
    cfg.top_c = req.value("top_c", cfg.top_c);
    cfg.llm_decompose = req.value("llm_decompose", false);
    cfg = PipelineConfig::FromJson(cfg.ToJson());  // validates
    Pipeline p = MakePipeline(d, m, cfg);
    if (req.contains("rq")) return Json(200, p.AskReframed(ReframedQuestionFromJson(req["rq"])).ToJson());
    return Json(200, p.Ask(Field(req, "question")).ToJson());
  }
  if (head == "decompose" && parts.size() == 1 && post) {
    auto req = ParseBody(body);
    auto [d, m] = Resolve(req);
    PipelineConfig cfg;
    cfg.llm_decompose = req.value("llm_decompose", false);
    return Json(200, ToJson(MakePipeline(d, m, cfg).Decompose(Field(req, "question"))));
  }
  if (head == "interpretations:parse" && parts.size() == 1 && post) {
    auto req = ParseBody(body);
    const Schema& schema =
        req.contains("dataset_id")
            ? GetDataset(req.at("dataset_id").get<std::string>()).data->schema()
            : GetDataset(default_dataset).data->schema();
    auto parsed = ParseInterpretation(Field(req, "text"), schema);
    return Json(200, ToJson(parsed));
  }
  if (head == "runs" && parts.size() == 1 && get) {
    return Json(200, store->ListRecords());
  }
  if (head == "runs" && parts.size() >= 2) {
    const std::string& id = parts[1];
    if (!store->HasRecord(id)) {
      throw Error(ErrorCode::kNotFound, "unknown run '" + id + "'", {{"run_id", id}});
    }
    if (get && parts.size() == 2) {
      nlohmann::json record = store->ReadRecord(id);
      nlohmann::json out = {{"run", record}};
      auto rec = store->RecordDir(id);
      for (const char* f : {"response.json", "explanation.json"}) {
        if (std::filesystem::exists(rec / f)) {
          out[std::string(f).substr(0, std::string(f).find('.'))] =
              nlohmann::json::parse(ReadFile(rec / f));
        }
      }
      nlohmann::json artifacts = nlohmann::json::array();
      for (const auto& r : record.value("results", nlohmann::json::array())) {
        std::string dir = r.value("dir", "");
        std::vector<std::string> files;
        if (IsSafeRunName(dir) && std::filesystem::is_directory(store->ExplainerDir(dir))) {
          for (const auto& f : std::filesystem::directory_iterator(store->ExplainerDir(dir))) {
            files.push_back(f.path().filename().string());
          }
        }
        std::sort(files.begin(), files.end());
        artifacts.push_back({{"explainer", r.value("explainer", "")},
                             {"dir", dir},
                             {"files", files}});
      }
      out["artifacts"] = artifacts;
      return Json(200, out);
    }
    if (post && parts.size() == 3 && parts[2] == "replay") {
      nlohmann::json record = store->ReadRecord(id);
      nlohmann::json req = {
          {"dataset_id", record.value("dataset", nlohmann::json::object()).value("id", "")},
          {"model_id", record.value("model", nlohmann::json::object()).value("id", "")}};
      auto [d, m] = Resolve(req);
      return Json(200, MakePipeline(d, m, {}).Replay(id).ToJson());
    }
  }
  throw Error(ErrorCode::kNotFound,
              "no such endpoint: " + std::string(method) + " " + std::string(path));
}

namespace {

void Install(httplib::Server& server, const Service& service, const std::string& cors) {
  auto handler = [&service, cors](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> headers(req.headers.begin(), req.headers.end());
    HttpResponse r = service.Handle(req.method, req.path, req.body, headers);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", cors);
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    if (!r.body.empty()) res.set_content(r.body, r.content_type);
  };
  server.Get(R"(/.*)", handler);
  server.Post(R"(/.*)", handler);
  server.Options(R"(/.*)", handler);
}

}  // namespace

int Service::Start() {
  auto& s = impl_->server;
  const size_t n = impl_->config.threads;
  s.new_task_queue = [n] { return new httplib::ThreadPool(n); };
  s.set_payload_max_length(64u << 20);
  Install(s, *this, impl_->config.cors_origin);
  int port = impl_->config.port == 0 ? s.bind_to_any_port(impl_->config.host)
                                     : (s.bind_to_port(impl_->config.host, impl_->config.port)
                                            ? impl_->config.port
                                            : -1);
  if (port < 0) {
    throw Error(ErrorCode::kIoError, "cannot bind " + impl_->config.host + ":" +
                                         std::to_string(impl_->config.port));
  }
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port;
}

void Service::Serve() {
  if (!impl_->thread.joinable()) Start();
  impl_->thread.join();
}

void Service::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace qx
