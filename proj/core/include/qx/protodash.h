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

#ifndef QX_PROTODASH_H_
#define QX_PROTODASH_H_

#include <optional>
#include <vector>

#include "qx/dataset.h"

namespace qx {

struct PrototypeSet {
  std::vector<size_t> indices;  // rows of X, in selection order
  std::vector<double> weights;  // nonnegative, aligned with indices
  std::vector<double> objective_trace;  // objective after each greedy step
  double bandwidth = 0.0;
};

// exp(-|a - b|^2 / (2 h^2))
double RbfKernel(std::span<const double> a, std::span<const double> b,
                 double bandwidth);

// Median of all pairwise Euclidean distances; InvalidBandwidth if it is 0.
double MedianPairwiseDistance(const Matrix& x);

// Greedy prototype selection maximizing w'mu - w'Kw/2 over w >= 0 supported
// on the selected rows, where K is the RBF Gram matrix of X and mu_j is the
// mean kernel value between X_j and the rows of Y. Each step adds the row
// with the largest positive gradient, then re-solves the weights by
// projected gradient ascent. `bandwidth` nullopt selects the median
// heuristic over X. Stops early when no gradient is positive.
PrototypeSet ProtodashSelect(const Matrix& x, const Matrix& y, size_t m,
                             std::optional<double> bandwidth = std::nullopt);

// The objective itself, for callers that want to compare subsets.
double ProtodashObjective(const Matrix& x, const Matrix& y,
                          const std::vector<size_t>& support,
                          const std::vector<double>& weights, double bandwidth);

// Optimal nonnegative weights on a fixed support.
std::vector<double> ProtodashWeights(const Matrix& x, const Matrix& y,
                                     const std::vector<size_t>& support,
                                     double bandwidth);

}  // namespace qx

#endif  // QX_PROTODASH_H_
