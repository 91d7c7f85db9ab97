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

#include "qx/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qx/error.h"
#include "qx/protodash.h"

namespace qx {

nlohmann::json MetricReport::ToJson() const {
  nlohmann::json j = {{"metric", metric},
                      {"value", value ? nlohmann::json(*value) : nlohmann::json(nullptr)},
                      {"modality", std::string(ModalityName(modality))},
                      {"explainer", explainer},
                      {"instances", instances},
                      {"config", config}};
  if (!note.empty()) j["note"] = note;
  return j;
}

MetricReport MetricReport::FromJson(const nlohmann::json& j) {
  MetricReport r;
  r.metric = j.at("metric");
  if (!j.at("value").is_null()) r.value = j.at("value").get<double>();
  auto m = ModalityFromName(j.at("modality").get<std::string>());
  if (!m) throw Error(ErrorCode::kParseError, "unknown modality in metric report");
  r.modality = *m;
  r.explainer = j.value("explainer", "");
  r.instances = j.value("instances", size_t{0});
  r.config = j.value("config", nlohmann::json::object());
  r.note = j.value("note", "");
  return r;
}

double PearsonCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "correlation needs two equal-length vectors of length >= 2");
  }
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  // Relative guard: variance indistinguishable from rounding noise.
  auto degenerate = [&](double ss, double m) {
    return !(ss > 1e-24 * std::max(1.0, m * m) * n);
  };
  if (degenerate(saa, ma) || degenerate(sbb, mb)) {
    throw Error(ErrorCode::kDegenerateVariance,
                "correlation undefined: an input has zero variance");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t k = i;
    while (k + 1 < order.size() && v[order[k + 1]] == v[order[i]]) ++k;
    double r = (static_cast<double>(i) + static_cast<double>(k)) / 2.0 + 1.0;
    for (size_t t = i; t <= k; ++t) ranks[order[t]] = r;
    i = k + 1;
  }
  return ranks;
}

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  auto ra = AverageRanks(a);
  auto rb = AverageRanks(b);
  return PearsonCorrelation(ra, rb);
}

double Faithfulness(const ModelFn& f, std::span<const double> x,
                    std::span<const double> phi,
                    std::span<const double> reference) {
  if (phi.size() != x.size() || reference.size() != x.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "attribution, instance and reference differ in width");
  }
  double fx = f(x);
  std::vector<double> delta(x.size());
  Row z(x.begin(), x.end());
  for (size_t i = 0; i < x.size(); ++i) {
    z[i] = reference[i];
    delta[i] = fx - f(z);
    z[i] = x[i];
  }
  return PearsonCorrelation(phi, delta);
}

std::vector<double> ExpectedLossDeltas(const ModelFn& f, std::span<const double> x,
                                       int label, std::span<const double> reference) {
  auto logloss = [&](double p) {
    p = std::clamp(p, 1e-15, 1.0 - 1e-15);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
  };
  double base = logloss(f(x));
  std::vector<double> e(x.size());
  Row z(x.begin(), x.end());
  for (size_t i = 0; i < x.size(); ++i) {
    z[i] = reference[i];
    e[i] = logloss(f(z)) - base;
    z[i] = x[i];
  }
  return e;
}

double Monotonicity(std::span<const double> phi, std::span<const double> expectations) {
  std::vector<double> mag(phi.size());
  for (size_t i = 0; i < phi.size(); ++i) mag[i] = std::fabs(phi[i]);
  return SpearmanCorrelation(mag, expectations);
}

double Fidelity(const RuleSet& rules, const Matrix& records,
                const std::vector<int>& model_labels) {
  if (records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "fidelity needs at least one record");
  }
  if (rules.rules.empty()) return 0.0;
  std::vector<const Rule*> ordered;
  for (const auto& r : rules.rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Rule* a, const Rule* b) { return a->coverage > b->coverage; });
  size_t agree = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    for (const Rule* r : ordered) {
      if (r->Covers(records[i])) {
        agree += r->label == model_labels.at(i);
        break;
      }
    }
  }
  return static_cast<double>(agree) / static_cast<double>(records.size());
}

double AverageRuleLength(const std::vector<Rule>& rules) {
  if (rules.empty()) throw Error(ErrorCode::kEmptyRuleSet, "rule set is empty");
  double total = 0.0;
  for (const auto& r : rules) total += static_cast<double>(r.length());
  return total / static_cast<double>(rules.size());
}

double Diversity(const Matrix& rows) {
  if (rows.size() < 2) {
    throw Error(ErrorCode::kTooFewInstances, "diversity needs at least two instances",
                {{"instances", rows.size()}});
  }
  double total = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t k = i + 1; k < rows.size(); ++k) {
      double s = 0.0;
      for (size_t j = 0; j < rows[i].size(); ++j) {
        s += (rows[i][j] - rows[k][j]) * (rows[i][j] - rows[k][j]);
      }
      total += std::sqrt(s);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double NonRepresentativeness(const Matrix& selected, const Matrix& reference,
                             double bandwidth) {
  if (!(bandwidth > 0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::kInvalidBandwidth, "kernel bandwidth must be positive",
                {{"bandwidth", bandwidth}});
  }
  if (selected.empty() || reference.empty()) {
    throw Error(ErrorCode::kTooFewInstances, "MMD needs two non-empty sets");
  }
  auto mean_kernel = [&](const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (const auto& p : a) {
      for (const auto& q : b) s += RbfKernel(p, q, bandwidth);
    }
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };
  double v = mean_kernel(selected, selected) + mean_kernel(reference, reference) -
             2.0 * mean_kernel(selected, reference);
  return std::max(v, 0.0);
}

}  // namespace qx
