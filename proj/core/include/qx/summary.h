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

#ifndef QX_SUMMARY_H_
#define QX_SUMMARY_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qx/dataset.h"

namespace qx {

struct FeatureStats {
  std::string feature;
  size_t count = 0;
  // Undefined (nullopt) on an empty record set.
  std::optional<double> mean, sd, min, max;
};

struct DataSummary {
  std::vector<FeatureStats> features;  // model columns
  size_t count = 0;
  size_t positives = 0;  // rows labelled with the positive class
  std::string group;     // serialized feature group the rows came from
};

// Sample standard deviation (n - 1); a single row has SD 0.
DataSummary Summarize(const Dataset& data, const std::vector<size_t>& rows,
                      std::string group = "");

nlohmann::json ToJson(const DataSummary& s);

}  // namespace qx

#endif  // QX_SUMMARY_H_
