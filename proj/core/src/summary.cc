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

#include "qx/summary.h"

#include <algorithm>
#include <cmath>

namespace qx {

DataSummary Summarize(const Dataset& data, const std::vector<size_t>& rows,
                      std::string group) {
  DataSummary s;
  s.count = rows.size();
  s.group = std::move(group);
  for (size_t i : rows) s.positives += data.y().at(i) == 1;
  auto names = data.feature_names();
  for (size_t col = 0; col < names.size(); ++col) {
    FeatureStats f;
    f.feature = names[col];
    f.count = rows.size();
    if (!rows.empty()) {
      double sum = 0.0, lo = INFINITY, hi = -INFINITY;
      for (size_t i : rows) {
        double v = data.row(i)[col];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double mean = sum / static_cast<double>(rows.size());
      double ss = 0.0;
      for (size_t i : rows) ss += (data.row(i)[col] - mean) * (data.row(i)[col] - mean);
      f.mean = mean;
      f.sd = rows.size() > 1 ? std::sqrt(ss / static_cast<double>(rows.size() - 1)) : 0.0;
      f.min = lo;
      f.max = hi;
    }
    s.features.push_back(std::move(f));
  }
  return s;
}

nlohmann::json ToJson(const DataSummary& s) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : s.features) {
    feats.push_back({{"feature", f.feature},
                     {"count", f.count},
                     {"mean", opt(f.mean)},
                     {"sd", opt(f.sd)},
                     {"min", opt(f.min)},
                     {"max", opt(f.max)}});
  }
  return {{"count", s.count},
          {"positives", s.positives},
          {"negatives", s.count - s.positives},
          {"group", s.group},
          {"features", feats}};
}

}  // namespace qx
