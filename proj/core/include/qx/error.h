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

#ifndef QX_ERROR_H_
#define QX_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace qx {

enum class ErrorCode {
  kParseError,
  kValidationError,
  kUnknownType,
  kUnsupportedType,
  kUnusableParse,
  kTypeMismatch,
  kSchemaMismatch,
  kEmptyDataset,
  kImputationError,
  kSingleClassData,
  kNoFeasibleRecord,
  kTooManyFeaturesForExact,
  kEmptyBackground,
  kInvalidBandwidth,
  kInvalidArgument,
  kNotATreeModel,
  kNoCounterfactualFound,
  kDegenerateVariance,
  kEmptyRuleSet,
  kTooFewInstances,
  kUnsupportedExplanationType,
  kNoOutputs,
  kTemplateSlotUnfillable,
  kEndpointError,
  kNotFound,
  kIoError,
  kUnauthorized,
};

// Stable wire name, e.g. "UnusableParse".
std::string_view ErrorCodeName(ErrorCode code);

// The single exception type thrown by the library. `detail` carries
// machine-readable context (offending id, line number, best margin, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

  // {"code": ..., "message": ..., "detail": {...}}
  nlohmann::json ToJson() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace qx

#endif  // QX_ERROR_H_
