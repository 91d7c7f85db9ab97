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

#include "qx/protodash.h"

#include <algorithm>
#include <cmath>

#include "qx/error.h"

namespace qx {

double RbfKernel(std::span<const double> a, std::span<const double> b,
                 double bandwidth) {
  double d2 = 0.0;
  for (size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
  return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
}

double MedianPairwiseDistance(const Matrix& x) {
  std::vector<double> d;
  d.reserve(x.size() * (x.size() - (x.empty() ? 0 : 1)) / 2);
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t k = i + 1; k < x.size(); ++k) {
      double s = 0.0;
      for (size_t j = 0; j < x[i].size(); ++j) {
        s += (x[i][j] - x[k][j]) * (x[i][j] - x[k][j]);
      }
      d.push_back(std::sqrt(s));
    }
  }
  double med = d.empty() ? 0.0 : Median(std::move(d));
  if (!(med > 0) || !std::isfinite(med)) {
    throw Error(ErrorCode::kInvalidBandwidth,
                "median pairwise distance is zero; pass an explicit bandwidth");
  }
  return med;
}

namespace {

double CheckBandwidth(const Matrix& x, std::optional<double> bandwidth) {
  if (!bandwidth) return MedianPairwiseDistance(x);
  if (!(*bandwidth > 0) || !std::isfinite(*bandwidth)) {
    throw Error(ErrorCode::kInvalidBandwidth, "kernel bandwidth must be positive",
                {{"bandwidth", *bandwidth}});
  }
  return *bandwidth;
}

std::vector<double> MeanKernel(const Matrix& x, const Matrix& y, double h) {
  std::vector<double> mu(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    for (const auto& r : y) mu[i] += RbfKernel(x[i], r, h);
    mu[i] /= static_cast<double>(y.size());
  }
  return mu;
}

// Projected gradient ascent on the support, warm-started from `w`. The step
// 1/L (L bounds the largest eigenvalue of K_S by its max row sum) makes
// every iterate non-decreasing in the objective.
void SolveWeights(const std::vector<std::vector<double>>& ks,
                  const std::vector<double>& mu_s, std::vector<double>& w) {
  const size_t s = w.size();
  double lip = 0.0;
  for (const auto& row : ks) {
    double sum = 0.0;
    for (double v : row) sum += std::fabs(v);
    lip = std::max(lip, sum);
  }
  if (!(lip > 0)) return;
  const double step = 1.0 / lip;
  for (int it = 0; it < 5000; ++it) {
    double moved = 0.0;
    std::vector<double> g(s);
    for (size_t a = 0; a < s; ++a) {
      g[a] = mu_s[a];
      for (size_t b = 0; b < s; ++b) g[a] -= ks[a][b] * w[b];
    }
    for (size_t a = 0; a < s; ++a) {
      double nw = std::max(0.0, w[a] + step * g[a]);
      moved = std::max(moved, std::fabs(nw - w[a]));
      w[a] = nw;
    }
    if (moved < 1e-12) break;
  }
}

double Objective(const std::vector<std::vector<double>>& ks,
                 const std::vector<double>& mu_s, const std::vector<double>& w) {
  double lin = 0.0, quad = 0.0;
  for (size_t a = 0; a < w.size(); ++a) {
    lin += w[a] * mu_s[a];
    for (size_t b = 0; b < w.size(); ++b) quad += w[a] * ks[a][b] * w[b];
  }
  return lin - 0.5 * quad;
}

}  // namespace

PrototypeSet ProtodashSelect(const Matrix& x, const Matrix& y, size_t m,
                             std::optional<double> bandwidth) {
  PrototypeSet out;
  if (m == 0) {
    if (bandwidth) out.bandwidth = CheckBandwidth(x, bandwidth);
    return out;
  }
  if (x.empty() || y.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "prototype selection needs rows");
  }
  if (m > x.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot select " + std::to_string(m) + " prototypes from " +
                    std::to_string(x.size()) + " rows");
  }
  const double h = CheckBandwidth(x, bandwidth);
  out.bandwidth = h;
  const std::vector<double> mu = MeanKernel(x, y, h);
  const size_t n = x.size();

  std::vector<char> chosen(n, 0);
  // K[:, selected] cached column by column.
  std::vector<std::vector<double>> kcol;
  std::vector<double> w;
  std::vector<std::vector<double>> ks;
  std::vector<double> mu_s;
  while (out.indices.size() < m) {
    size_t best = n;
    double best_g = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double g = mu[i];
      for (size_t a = 0; a < w.size(); ++a) g -= kcol[a][i] * w[a];
      if (g > best_g) {
        best_g = g;
        best = i;
      }
    }
    if (best == n) break;
    chosen[best] = 1;
    std::vector<double> col(n);
    for (size_t i = 0; i < n; ++i) col[i] = RbfKernel(x[i], x[best], h);
    kcol.push_back(std::move(col));
    out.indices.push_back(best);
    w.push_back(0.0);
    mu_s.push_back(mu[best]);
    ks.assign(out.indices.size(), std::vector<double>(out.indices.size()));
    for (size_t a = 0; a < out.indices.size(); ++a) {
      for (size_t b = 0; b < out.indices.size(); ++b) {
        ks[a][b] = kcol[b][out.indices[a]];
      }
    }
    SolveWeights(ks, mu_s, w);
    out.objective_trace.push_back(Objective(ks, mu_s, w));
  }
  out.weights = w;
  return out;
}

double ProtodashObjective(const Matrix& x, const Matrix& y,
                          const std::vector<size_t>& support,
                          const std::vector<double>& weights, double bandwidth) {
  auto mu = MeanKernel(x, y, bandwidth);
  double lin = 0.0, quad = 0.0;
  for (size_t a = 0; a < support.size(); ++a) {
    lin += weights[a] * mu[support[a]];
    for (size_t b = 0; b < support.size(); ++b) {
      quad += weights[a] * weights[b] *
              RbfKernel(x[support[a]], x[support[b]], bandwidth);
    }
  }
  return lin - 0.5 * quad;
}

std::vector<double> ProtodashWeights(const Matrix& x, const Matrix& y,
                                     const std::vector<size_t>& support,
                                     double bandwidth) {
  auto mu = MeanKernel(x, y, bandwidth);
  std::vector<std::vector<double>> ks(support.size(),
                                      std::vector<double>(support.size()));
  std::vector<double> mu_s;
  for (size_t a = 0; a < support.size(); ++a) {
    mu_s.push_back(mu[support[a]]);
    for (size_t b = 0; b < support.size(); ++b) {
      ks[a][b] = RbfKernel(x[support[a]], x[support[b]], bandwidth);
    }
  }
  std::vector<double> w(support.size(), 0.0);
  SolveWeights(ks, mu_s, w);
  return w;
}

}  // namespace qx
