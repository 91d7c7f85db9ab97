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

#include "qx/counterfactual.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "qx/error.h"

namespace qx {

namespace {

double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Margin by which the label differs from `original`; > 0 means flipped.
double FlipMargin(double p, int original) {
  return original == 1 ? 0.5 - p : p - 0.5;
}

bool Flips(double p, int original) { return (p >= 0.5 ? 1 : 0) != original; }

constexpr double kHingeTarget = 0.02;

}  // namespace

FeatureSpace FeatureSpace::FromDataset(
    const Dataset& data,
    const std::optional<std::vector<std::string>>& immutable_override) {
  FeatureSpace s;
  const auto& schema = data.schema();
  for (size_t col = 0; col < data.dims(); ++col) {
    const auto& spec = schema.feature(schema.model_features()[col]);
    s.names.push_back(spec.name);
    s.lower.push_back(data.ColumnMin(col));
    s.upper.push_back(data.ColumnMax(col));
    s.decimals.push_back(spec.decimals);
    bool frozen = spec.immutable;
    if (immutable_override) {
      frozen = std::find(immutable_override->begin(), immutable_override->end(),
                         spec.name) != immutable_override->end();
    }
    s.immutable.push_back(frozen);
  }
  return s;
}

double FeatureSpace::Clip(size_t j, double v) const {
  v = std::clamp(v, lower[j], upper[j]);
  double scale = std::pow(10.0, decimals[j]);
  double r = std::round(v * scale) / scale;
  // Rounding may step just outside the observed range.
  if (r > upper[j]) r -= 1.0 / scale;
  if (r < lower[j]) r += 1.0 / scale;
  return std::clamp(r, lower[j], upper[j]);
}

nlohmann::json CounterfactualConfig::ToJson() const {
  return {{"k", k},
          {"restarts", restarts},
          {"evaluations", evaluations},
          {"lambda_proximity", lambda_proximity},
          {"lambda_diversity", lambda_diversity},
          {"seed", seed}};
}

CounterfactualSet CounterfactualSearch(const ModelFn& proba,
                                       std::span<const double> x,
                                       const FeatureSpace& space,
                                       const CounterfactualConfig& config) {
  if (config.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const size_t d = x.size();
  if (space.size() != d) {
    throw Error(ErrorCode::kSchemaMismatch, "instance width does not match feature space");
  }
  CounterfactualSet out;
  out.original.assign(x.begin(), x.end());
  out.original_probability = proba(x);
  out.original_label = out.original_probability >= 0.5 ? 1 : 0;
  out.features = space.names;
  out.config = config;
  for (size_t j = 0; j < d; ++j) {
    if (space.immutable[j]) out.immutable.push_back(space.names[j]);
  }
  std::vector<size_t> mutable_cols;
  for (size_t j = 0; j < d; ++j) {
    if (!space.immutable[j] && space.upper[j] > space.lower[j]) mutable_cols.push_back(j);
  }

  std::vector<double> range(d);
  for (size_t j = 0; j < d; ++j) {
    range[j] = space.upper[j] > space.lower[j] ? space.upper[j] - space.lower[j] : 1.0;
  }
  auto proximity = [&](const Row& c) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += std::fabs(c[j] - x[j]) / range[j];
    return s / static_cast<double>(d);
  };
  auto distance = [&](const Row& a, const Row& b) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += std::fabs(a[j] - b[j]) / range[j];
    return s / static_cast<double>(d);
  };

  std::vector<Row> found;
  double best_margin = -INFINITY;
  auto loss = [&](const Row& c, double p) {
    double hinge = std::max(0.0, kHingeTarget - FlipMargin(p, out.original_label));
    double div = 0.0;
    if (!found.empty()) {
      for (const auto& f : found) div += distance(c, f);
      div /= static_cast<double>(found.size());
    }
    return hinge + config.lambda_proximity * proximity(c) -
           config.lambda_diversity * div;
  };

  std::mt19937_64 rng(config.seed);
  if (!mutable_cols.empty()) {
    for (size_t r = 0; r < config.restarts; ++r) {
      Row cur(x.begin(), x.end());
      if (r > 0) {
        // Later restarts begin from a random partial perturbation.
        for (size_t j : mutable_cols) {
          if (Uniform01(rng) < 0.5) {
            cur[j] = space.Clip(j, space.lower[j] + Uniform01(rng) * (space.upper[j] - space.lower[j]));
          }
        }
      }
      double cur_p = proba(cur);
      double cur_loss = loss(cur, cur_p);
      for (size_t e = 0; e < config.evaluations; ++e) {
        Row cand = cur;
        double u = Uniform01(rng);
        size_t moves = u < 0.2 ? 2 : 1;
        for (size_t m = 0; m < moves; ++m) {
          size_t j = mutable_cols[rng() % mutable_cols.size()];
          double v;
          if (Uniform01(rng) < 0.25) {
            v = space.lower[j] + Uniform01(rng) * (space.upper[j] - space.lower[j]);
          } else if (Uniform01(rng) < 0.3) {
            v = cand[j] + (x[j] - cand[j]) * Uniform01(rng);  // pull back
          } else {
            double step = (Uniform01(rng) * 2.0 - 1.0) * 0.25 * range[j] *
                          Uniform01(rng);
            v = cand[j] + step;
          }
          cand[j] = space.Clip(j, v);
        }
        double p = proba(cand);
        double l = loss(cand, p);
        if (l < cur_loss) {
          cur = std::move(cand);
          cur_p = p;
          cur_loss = l;
        }
      }
      // Sparsify: restore original values where the flip survives.
      if (Flips(cur_p, out.original_label)) {
        for (size_t j : mutable_cols) {
          if (cur[j] == x[j]) continue;
          Row cand = cur;
          cand[j] = x[j];
          double p = proba(cand);
          if (Flips(p, out.original_label)) {
            cur = std::move(cand);
            cur_p = p;
          }
        }
      }
      best_margin = std::max(best_margin, FlipMargin(cur_p, out.original_label));
      if (Flips(cur_p, out.original_label) &&
          std::find(found.begin(), found.end(), cur) == found.end()) {
        found.push_back(cur);
      }
    }
  }

  for (const auto& c : found) {
    // Re-predict before returning; immutable columns must be untouched.
    double p = proba(c);
    if (!Flips(p, out.original_label)) continue;
    bool frozen_ok = true;
    for (size_t j = 0; j < d; ++j) frozen_ok = frozen_ok && (!space.immutable[j] || c[j] == x[j]);
    if (!frozen_ok) continue;
    Counterfactual cf;
    cf.values = c;
    cf.probability = p;
    cf.label = p >= 0.5 ? 1 : 0;
    for (size_t j = 0; j < d; ++j) cf.deltas.push_back(c[j] - x[j]);
    cf.proximity = proximity(c);
    out.items.push_back(std::move(cf));
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const auto& a, const auto& b) { return a.proximity < b.proximity; });
  if (out.items.size() > config.k) out.items.resize(config.k);
  if (out.items.empty()) {
    throw Error(ErrorCode::kNoCounterfactualFound,
                "no counterfactual found within the search budget",
                {{"best_margin", std::isfinite(best_margin) ? nlohmann::json(best_margin)
                                                             : nlohmann::json(nullptr)},
                 {"restarts", config.restarts},
                 {"evaluations", config.evaluations}});
  }
  return out;
}

nlohmann::json ToJson(const CounterfactualSet& set) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& c : set.items) {
    items.push_back({{"values", c.values},
                     {"label", c.label},
                     {"probability", c.probability},
                     {"deltas", c.deltas},
                     {"proximity", c.proximity}});
  }
  return {{"features", set.features},
          {"original", set.original},
          {"original_label", set.original_label},
          {"original_probability", set.original_probability},
          {"immutable", set.immutable},
          {"config", set.config.ToJson()},
          {"counterfactuals", items}};
}

}  // namespace qx
