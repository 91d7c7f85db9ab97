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

#ifndef QX_SERVICE_H_
#define QX_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qx/error.h"
#include "qx/llm_client.h"
#include "qx/registry.h"

namespace qx {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_root = "qxplain-data";
  std::string api_token;          // empty: no auth
  std::string cors_origin = "*";  // console UI origin
  LlmEndpoint llm;
  size_t threads = 16;

  // QX_HOST, QX_PORT, QX_DATA_ROOT, QX_API_TOKEN, QX_CORS_ORIGIN, LLM_*.
  static ServiceConfig FromEnv();
  // JSON file; present keys override `base`.
  static ServiceConfig FromFile(const std::filesystem::path& path, ServiceConfig base);
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// HTTP status of a structured error.
int HttpStatusFor(ErrorCode code);

// The /v1 API. Handle() is transport-independent and thread-safe; Start()
// and Serve() put it behind an HTTP server. Datasets and models live under
// data_root with content-hash ids; runs under data_root/runs.
class Service {
 public:
  explicit Service(ServiceConfig config, Registry registry = Registry::LoadDefault());
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Registers the bundled PIMA data and trains the default logistic
  // regression; both become the defaults for /ask.
  void LoadDefaults();
  const std::string& default_dataset() const;
  const std::string& default_model() const;

  HttpResponse Handle(std::string_view method, std::string_view path, std::string_view body,
                      const std::map<std::string, std::string>& headers = {}) const;

  // Binds (port 0 = any free port), serves on a background thread and
  // returns the bound port.
  int Start();
  // Starts if needed, then blocks until Stop().
  void Serve();
  // Stops accepting; safe from a signal handler's point of view (no join).
  void Stop();

  const ServiceConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qx

#endif  // QX_SERVICE_H_
