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

#include "qx/llm_client.h"

#include <cstdlib>

#include "httplib.h"
#include "qx/common.h"
#include "qx/error.h"
#include "qx/interp.h"

namespace qx {

LlmEndpoint LlmEndpoint::FromEnv() {
  LlmEndpoint e;
  if (const char* v = std::getenv("LLM_BASE_URL")) e.base_url = v;
  if (const char* v = std::getenv("LLM_MODEL")) e.model = v;
  if (const char* v = std::getenv("LLM_API_KEY")) e.api_key = v;
  return e;
}

std::string ChatComplete(const LlmEndpoint& endpoint, std::string_view system,
                         std::string_view user) {
  if (!endpoint.configured()) {
    throw Error(ErrorCode::kEndpointError, "no LLM endpoint configured");
  }
  // Split "scheme://host[:port]/prefix" into origin and path prefix.
  std::string url = endpoint.base_url;
  size_t scheme = url.find("://");
  size_t slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  std::string origin = slash == std::string::npos ? url : url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  nlohmann::json body = {
      {"model", endpoint.model},
      {"temperature", 0},
      {"messages",
       {{{"role", "system"}, {"content", std::string(system)}},
        {{"role", "user"}, {"content", std::string(user)}}}}};

  httplib::Client client(origin);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    throw Error(ErrorCode::kEndpointError,
                "LLM endpoint unreachable: " + httplib::to_string(res.error()),
                {{"url", endpoint.base_url}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kEndpointError,
                "LLM endpoint returned HTTP " + std::to_string(res->status),
                {{"url", endpoint.base_url}, {"status", res->status}});
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEndpointError,
                std::string("malformed chat-completion response: ") + e.what(),
                {{"url", endpoint.base_url}});
  }
}

std::string BuildDecomposePrompt(const Registry& registry, const Schema& schema,
                                 std::string_view question) {
  std::string p =
      "Classify the user question into one explanation type and rewrite it "
      "as a machine interpretation.\n\nExplanation types and example "
      "questions:\n";
  for (const auto& t : registry.types()) {
    p += "- " + t.id + " (" + t.label + "): " + t.description + "\n";
    for (const auto& q : t.questions) p += "    e.g. " + q.text + "\n";
  }
  p += "\nFeatures: ";
  for (size_t i = 0; i < schema.size(); ++i) {
    if (i) p += ", ";
    p += schema.feature(i).name;
  }
  p += "\nOutcome: " + schema.target().label + "\n";
  p +=
      "\nAnswer with exactly these lines:\nExplanationType: <type id>\n"
      "MachineInterpretation: Action(Target, Feature = value, ...)\n"
      "Action: <verb>\nLikelihood: <more likely|less likely|high|low|likely|"
      "empty>\n\nQuestion: ";
  p += question;
  return p;
}

ReframedQuestion ParseDecomposeResponse(std::string_view response,
                                        std::string_view question,
                                        const PatternDecomposer& fallback) {
  std::string type, interp, action, likelihood;
  bool has_interp = false;
  for (auto& raw : Split(response, '\n')) {
    std::string line = Trim(raw);
    size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = AliasKey(line.substr(0, colon));
    std::string value = Trim(line.substr(colon + 1));
    if (key == "explanationtype") type = value;
    if (key == "machineinterpretation") {
      interp = value;
      has_interp = true;
    }
    if (key == "action") action = value;
    if (key == "likelihood") likelihood = value;
  }
  auto fall_back = [&] {
    ReframedQuestion rq = fallback.Decompose(question);
    rq.provenance = "fallback";
    return rq;
  };
  if (!has_interp || interp.empty()) return fall_back();
  try {
    ParseInterpretation(interp, fallback.schema());
  } catch (const Error&) {
    return fall_back();
  }
  ReframedQuestion rq;
  rq.question = std::string(question);
  rq.provenance = "llm";
  rq.machine_interpretation = interp;
  rq.action = action;
  std::string lk = ToLower(likelihood);
  rq.likelihood = (lk == "empty" || lk == "none") ? "" : lk;
  rq.explanation_type = std::string(kUnknownType);
  for (const auto& t : fallback.registry().types()) {
    if (AliasKey(type) == AliasKey(t.id) || AliasKey(type) == AliasKey(t.label)) {
      rq.explanation_type = t.id;
    }
  }
  return rq;
}

ReframedQuestion LlmDecompose(std::string_view question,
                              const LlmEndpoint& endpoint,
                              const PatternDecomposer& fallback) {
  std::string prompt =
      BuildDecomposePrompt(fallback.registry(), fallback.schema(), question);
  std::string response = ChatComplete(
      endpoint, "You decompose questions about a clinical prediction model.",
      prompt);
  return ParseDecomposeResponse(response, question, fallback);
}

}  // namespace qx
