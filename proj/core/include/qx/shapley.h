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

#ifndef QX_SHAPLEY_H_
#define QX_SHAPLEY_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qx/dataset.h"

namespace qx {

// Scalar model output, typically P(positive class).
using ModelFn = std::function<double(std::span<const double>)>;

inline constexpr size_t kMaxExactFeatures = 12;

enum class ShapleyMode { kExact, kSampled };

struct ShapleyConfig {
  ShapleyMode mode = ShapleyMode::kExact;
  // Out-of-coalition features take the background medians; with
  // `average_background` the value function instead averages the model over
  // every background row.
  bool average_background = false;
  size_t permutations = 1000;  // sampled mode
  uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct FeatureAttribution {
  std::vector<double> phi;        // positive pushes toward the positive class
  std::vector<double> std_error;  // sampled mode only; zeros otherwise
  double baseline = 0.0;          // v(empty set)
  double prediction = 0.0;        // v(all features) = f(x)
  Row instance;
};

// Throws TooManyFeaturesForExact (exact mode, d > 12) and EmptyBackground.
FeatureAttribution ShapleyAttribution(const ModelFn& f, std::span<const double> x,
                                      const Matrix& background,
                                      const ShapleyConfig& config = {});

// Per-column medians of `rows`.
Row ColumnMedians(const Matrix& rows);

}  // namespace qx

#endif  // QX_SHAPLEY_H_
