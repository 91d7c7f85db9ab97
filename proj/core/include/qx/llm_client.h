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

#ifndef QX_LLM_CLIENT_H_
#define QX_LLM_CLIENT_H_

#include <string>
#include <string_view>

#include "qx/decompose.h"
#include "qx/registry.h"
#include "qx/schema.h"

namespace qx {

// OpenAI-compatible chat-completion endpoint.
struct LlmEndpoint {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;
  int timeout_seconds = 30;

  // LLM_BASE_URL, LLM_MODEL, LLM_API_KEY.
  static LlmEndpoint FromEnv();
  bool configured() const { return !base_url.empty(); }
};

// One system + one user message; returns the first choice's content.
// Throws EndpointError on network, HTTP or protocol failure.
std::string ChatComplete(const LlmEndpoint& endpoint, std::string_view system,
                         std::string_view user);

// In-context prompt listing each type's prototypical questions and the
// schema's features.
std::string BuildDecomposePrompt(const Registry& registry, const Schema& schema,
                                 std::string_view question);

// Reads "ExplanationType:", "MachineInterpretation:", "Action:" and
// "Likelihood:" lines. A missing or unparsable interpretation yields the
// pattern decomposer's answer with provenance "fallback".
ReframedQuestion ParseDecomposeResponse(std::string_view response,
                                        std::string_view question,
                                        const PatternDecomposer& fallback);

// EndpointError propagates; only malformed responses fall back.
ReframedQuestion LlmDecompose(std::string_view question,
                              const LlmEndpoint& endpoint,
                              const PatternDecomposer& fallback);

}  // namespace qx

#endif  // QX_LLM_CLIENT_H_
