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

#include "qx/shapley.h"

#include <cmath>
#include <numeric>
#include <random>

#include "qx/error.h"

namespace qx {

nlohmann::json ShapleyConfig::ToJson() const {
  return {{"mode", mode == ShapleyMode::kExact ? "exact" : "sampled"},
          {"value_function", average_background ? "background_mean" : "median"},
          {"permutations", permutations},
          {"seed", seed}};
}

Row ColumnMedians(const Matrix& rows) {
  if (rows.empty()) return {};
  Row out(rows.front().size());
  for (size_t j = 0; j < out.size(); ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r[j]);
    out[j] = Median(std::move(col));
  }
  return out;
}

namespace {

// v(S): the model with features outside the coalition replaced.
class ValueFunction {
 public:
  ValueFunction(const ModelFn& f, std::span<const double> x, const Matrix& bg,
                bool average)
      : f_(f), x_(x.begin(), x.end()), bg_(bg), average_(average),
        medians_(ColumnMedians(bg)), scratch_(x.size()) {}

  // `in[j]` marks coalition membership.
  double operator()(const std::vector<char>& in) {
    if (!average_) {
      for (size_t j = 0; j < x_.size(); ++j) scratch_[j] = in[j] ? x_[j] : medians_[j];
      return f_(scratch_);
    }
    double s = 0.0;
    for (const auto& r : bg_) {
      for (size_t j = 0; j < x_.size(); ++j) scratch_[j] = in[j] ? x_[j] : r[j];
      s += f_(scratch_);
    }
    return s / static_cast<double>(bg_.size());
  }

 private:
  const ModelFn& f_;
  Row x_;
  const Matrix& bg_;
  bool average_;
  Row medians_;
  Row scratch_;
};

}  // namespace

FeatureAttribution ShapleyAttribution(const ModelFn& f, std::span<const double> x,
                                      const Matrix& background,
                                      const ShapleyConfig& config) {
  const size_t d = x.size();
  if (background.empty()) {
    throw Error(ErrorCode::kEmptyBackground, "Shapley background set is empty");
  }
  if (config.mode == ShapleyMode::kExact && d > kMaxExactFeatures) {
    throw Error(ErrorCode::kTooManyFeaturesForExact,
                "exact Shapley supports at most " +
                    std::to_string(kMaxExactFeatures) + " features, got " +
                    std::to_string(d),
                {{"features", d}, {"max", kMaxExactFeatures}});
  }
  ValueFunction v(f, x, background, config.average_background);
  FeatureAttribution out;
  out.instance.assign(x.begin(), x.end());
  out.phi.assign(d, 0.0);
  out.std_error.assign(d, 0.0);
  std::vector<char> in(d, 0);
  out.baseline = v(in);
  std::fill(in.begin(), in.end(), 1);
  out.prediction = v(in);

  if (config.mode == ShapleyMode::kExact) {
    const size_t n_masks = size_t{1} << d;
    std::vector<double> value(n_masks);
    for (size_t mask = 0; mask < n_masks; ++mask) {
      for (size_t j = 0; j < d; ++j) in[j] = (mask >> j) & 1;
      value[mask] = v(in);
    }
    // weight[s] = s! (d - s - 1)! / d!
    std::vector<double> weight(d);
    for (size_t s = 0; s < d; ++s) {
      weight[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(double(d - s)) -
                           std::lgamma(d + 1.0));
    }
    for (size_t mask = 0; mask < n_masks; ++mask) {
      size_t s = static_cast<size_t>(__builtin_popcountll(mask));
      for (size_t i = 0; i < d; ++i) {
        if ((mask >> i) & 1) continue;
        out.phi[i] += weight[s] * (value[mask | (size_t{1} << i)] - value[mask]);
      }
    }
    return out;
  }

  // Sampled: mean marginal contribution over seeded random permutations.
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> perm(d);
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  const size_t n = std::max<size_t>(config.permutations, 1);
  for (size_t p = 0; p < n; ++p) {
    std::iota(perm.begin(), perm.end(), 0);
    for (size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    std::fill(in.begin(), in.end(), 0);
    double prev = out.baseline;
    for (size_t i : perm) {
      in[i] = 1;
      double cur = v(in);
      double delta = cur - prev;
      sum[i] += delta;
      sum_sq[i] += delta * delta;
      prev = cur;
    }
  }
  for (size_t i = 0; i < d; ++i) {
    double mean = sum[i] / n;
    out.phi[i] = mean;
    if (n > 1) {
      double var = (sum_sq[i] - n * mean * mean) / (n - 1);
      out.std_error[i] = std::sqrt(std::max(var, 0.0) / n);
    }
  }
  return out;
}

}  // namespace qx
