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

#include "qx/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

double Median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return (lo + hi) / 2.0;
}

Dataset Dataset::LoadCsv(const std::filesystem::path& path, const Schema& schema,
                         std::optional<std::vector<std::string>> impute_columns) {
  return FromCsvText(ReadFile(path), schema, std::move(impute_columns),
                     path.string());
}

Dataset Dataset::FromCsvText(std::string_view text, const Schema& schema,
                             std::optional<std::vector<std::string>> impute_columns,
                             std::string source) {
  Dataset d;
  d.schema_ = schema;
  d.source_ = std::move(source);
  d.hash_ = Sha256Hex(text);

  std::vector<std::string> lines;
  for (auto& l : Split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!Trim(l).empty()) lines.push_back(std::move(l));
  }
  if (lines.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "dataset file is empty",
                {{"source", d.source_}});
  }
  auto header = Split(lines[0], ',');
  for (auto& h : header) h = Trim(h);

  // Column position of each schema feature and of the target.
  const auto& target = schema.target();
  std::optional<size_t> target_col;
  std::vector<std::optional<size_t>> feature_col(schema.size());
  for (size_t c = 0; c < header.size(); ++c) {
    if (AliasKey(header[c]) == AliasKey(target.column)) {
      target_col = c;
      continue;
    }
    bool matched = false;
    for (size_t f = 0; f < schema.size(); ++f) {
      if (AliasKey(header[c]) == AliasKey(schema.feature(f).name)) {
        feature_col[f] = c;
        matched = true;
      }
    }
    if (!matched) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "CSV column '" + header[c] + "' is not in the schema",
                  {{"column", header[c]}});
    }
  }
  if (!target_col) {
    throw Error(ErrorCode::kSchemaMismatch,
                "CSV lacks the target column '" + target.column + "'",
                {{"column", target.column}});
  }
  for (size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema.feature(f);
    if (!feature_col[f] && (spec.is_numeric() || !spec.default_value)) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "CSV lacks column '" + spec.name + "'",
                  {{"column", spec.name}});
    }
    if (!spec.is_numeric()) d.cat_features_.push_back(f);
  }
  if (lines.size() < 2) {
    throw Error(ErrorCode::kEmptyDataset, "dataset has no data rows",
                {{"source", d.source_}});
  }

  const auto& model_features = schema.model_features();
  for (size_t r = 1; r < lines.size(); ++r) {
    auto cells = Split(lines[r], ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "row " + std::to_string(r) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()),
                  {{"row", r}});
    }
    Row row;
    row.reserve(model_features.size());
    for (size_t f : model_features) {
      auto v = ParseDouble(cells[*feature_col[f]]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "row " + std::to_string(r) + ": '" + cells[*feature_col[f]] +
                        "' is not a number for " + schema.feature(f).name,
                    {{"row", r}, {"column", schema.feature(f).name}});
      }
      row.push_back(*v);
    }
    std::vector<std::string> cats;
    for (size_t f : d.cat_features_) {
      const auto& spec = schema.feature(f);
      std::string raw = feature_col[f] ? Trim(cells[*feature_col[f]]) : "";
      if (raw.empty() && spec.default_value) raw = *spec.default_value;
      auto cat = schema.ResolveCategory(f, raw);
      if (!cat) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "row " + std::to_string(r) + ": unknown category '" + raw +
                        "' for " + spec.name,
                    {{"row", r}, {"column", spec.name}});
      }
      cats.push_back(spec.categories[*cat].value);
    }
    std::string label = Trim(cells[*target_col]);
    int y;
    if (label == "1" || AliasKey(label) == AliasKey(target.positive_label)) {
      y = 1;
    } else if (label == "0" || AliasKey(label) == AliasKey(target.negative_label)) {
      y = 0;
    } else {
      throw Error(ErrorCode::kSchemaMismatch,
                  "row " + std::to_string(r) + ": unknown label '" + label + "'",
                  {{"row", r}});
    }
    d.x_.push_back(std::move(row));
    d.categorical_.push_back(std::move(cats));
    d.y_.push_back(y);
  }

  std::vector<std::string> impute;
  if (impute_columns) {
    impute = *impute_columns;
  } else {
    for (const auto& f : schema.features()) {
      if (f.impute_zero) impute.push_back(f.name);
    }
  }
  for (const auto& name : impute) {
    size_t f = schema.IndexOf(name);
    auto col = d.ColumnOf(f);
    if (!col) {
      throw Error(ErrorCode::kImputationError,
                  "cannot impute categorical column " + name);
    }
    std::vector<double> nonzero;
    for (const auto& row : d.x_) {
      if (row[*col] != 0.0) nonzero.push_back(row[*col]);
    }
    if (nonzero.empty()) {
      throw Error(ErrorCode::kImputationError,
                  "column " + name + " has no nonzero entries to take a median of",
                  {{"column", name}});
    }
    double med = Median(nonzero);
    d.imputed_median_[schema.feature(f).name] = med;
    for (size_t r = 0; r < d.x_.size(); ++r) {
      if (d.x_[r][*col] == 0.0) {
        d.x_[r][*col] = med;
        d.log_.push_back({schema.feature(f).name, r, 0.0, med});
      }
    }
  }
  d.ComputeStats();
  return d;
}

Dataset Dataset::FromMatrix(const Schema& schema, Matrix x, std::vector<int> y) {
  if (x.empty()) throw Error(ErrorCode::kEmptyDataset, "empty matrix");
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label count does not match rows");
  }
  Dataset d;
  d.schema_ = schema;
  for (size_t f = 0; f < schema.size(); ++f) {
    if (!schema.feature(f).is_numeric()) d.cat_features_.push_back(f);
  }
  for (const auto& row : x) {
    if (row.size() != schema.model_features().size()) {
      throw Error(ErrorCode::kSchemaMismatch, "row width does not match schema");
    }
    std::vector<std::string> cats;
    for (size_t f : d.cat_features_) {
      const auto& spec = schema.feature(f);
      cats.push_back(spec.default_value ? *spec.default_value
                                        : spec.categories.front().value);
    }
    d.categorical_.push_back(std::move(cats));
  }
  d.x_ = std::move(x);
  d.y_ = std::move(y);
  std::string blob;
  for (size_t r = 0; r < d.x_.size(); ++r) {
    for (double v : d.x_[r]) blob += FormatExact(v) + ",";
    blob += std::to_string(d.y_[r]) + "\n";
  }
  d.hash_ = Sha256Hex(blob);
  d.source_ = "memory";
  d.ComputeStats();
  return d;
}

void Dataset::ComputeStats() {
  size_t dcols = dims();
  min_.assign(dcols, INFINITY);
  max_.assign(dcols, -INFINITY);
  median_.assign(dcols, 0.0);
  for (size_t j = 0; j < dcols; ++j) {
    std::vector<double> col;
    col.reserve(x_.size());
    for (const auto& row : x_) {
      col.push_back(row[j]);
      min_[j] = std::min(min_[j], row[j]);
      max_[j] = std::max(max_[j], row[j]);
    }
    median_[j] = Median(std::move(col));
  }
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  for (size_t f : schema_.model_features()) out.push_back(schema_.feature(f).name);
  return out;
}

std::optional<size_t> Dataset::ColumnOf(size_t feature) const {
  const auto& mf = schema_.model_features();
  auto it = std::find(mf.begin(), mf.end(), feature);
  if (it == mf.end()) return std::nullopt;
  return static_cast<size_t>(it - mf.begin());
}

CellValue Dataset::Cell(size_t i, size_t feature) const {
  if (auto col = ColumnOf(feature)) return x_.at(i)[*col];
  auto it = std::find(cat_features_.begin(), cat_features_.end(), feature);
  if (it == cat_features_.end()) {
    throw Error(ErrorCode::kSchemaMismatch, "feature index out of range");
  }
  return categorical_.at(i)[static_cast<size_t>(it - cat_features_.begin())];
}

nlohmann::json Dataset::ImputationSummary() const {
  nlohmann::json out = nlohmann::json::object();
  std::map<std::string, size_t> counts;
  for (const auto& r : log_) counts[r.column]++;
  for (const auto& [col, med] : imputed_median_) {
    out[col] = {{"imputed_cells", counts[col]}, {"median", med}};
  }
  return out;
}

Dataset Dataset::Subset(const std::vector<size_t>& indices) const {
  Dataset d;
  d.schema_ = schema_;
  d.cat_features_ = cat_features_;
  d.source_ = source_;
  d.hash_ = hash_;
  for (size_t i : indices) {
    d.x_.push_back(x_.at(i));
    d.categorical_.push_back(categorical_.at(i));
    d.y_.push_back(y_.at(i));
  }
  if (!d.x_.empty()) d.ComputeStats();
  return d;
}

namespace {

struct Resolved {
  const FeatureConstraint* c;
  size_t feature;
  std::optional<size_t> col;
  double range;  // observed max - min, >= tiny
};

std::vector<Resolved> Resolve(const Dataset& data, const FeatureGroup& group) {
  std::vector<Resolved> out;
  for (const auto& c : group.constraints()) {
    size_t f = data.schema().IndexOf(c.feature);
    auto col = data.ColumnOf(f);
    double range = 1.0;
    if (col) {
      range = data.ColumnMax(*col) - data.ColumnMin(*col);
      if (!(range > 0)) range = 1.0;
    }
    out.push_back({&c, f, col, range});
  }
  return out;
}

bool IsSoft(const Resolved& r) {
  return r.col && r.c->op == ConstraintOp::kEq && !r.c->is_categorical();
}

// Distance from v to the constraint's satisfying set, in original units.
double Gap(const FeatureConstraint& c, double v) {
  switch (c.op) {
    case ConstraintOp::kEq: return std::fabs(v - c.value);
    case ConstraintOp::kLt:
    case ConstraintOp::kLe: return std::max(0.0, v - c.value);
    case ConstraintOp::kGt:
    case ConstraintOp::kGe: return std::max(0.0, c.value - v);
    case ConstraintOp::kRange:
      if (v < c.lower) return c.lower - v;
      if (v >= c.upper) return v - c.upper;
      return 0.0;
  }
  return 0.0;
}

RecordSet Closest(const Dataset& data, const std::vector<Resolved>& cons,
                  const std::vector<size_t>& candidates, size_t k,
                  bool relax_hard) {
  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(candidates.size());
  for (size_t i : candidates) {
    double dist = 0.0;
    for (const auto& r : cons) {
      if (!relax_hard && !IsSoft(r)) continue;
      if (r.col) {
        dist += Gap(*r.c, data.row(i)[*r.col]) / r.range;
      } else if (!ConstraintSatisfied(*r.c, data.Cell(i, r.feature))) {
        dist += 1.0;
      }
    }
    scored.emplace_back(dist, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  RecordSet out;
  out.approximate = true;
  for (size_t n = 0; n < std::min(k, scored.size()); ++n) {
    size_t i = scored[n].second;
    out.indices.push_back(i);
    std::map<std::string, double> dev;
    for (const auto& r : cons) {
      if (!relax_hard && !IsSoft(r)) continue;
      if (r.col) {
        dev[r.c->feature] = Gap(*r.c, data.row(i)[*r.col]);
      } else {
        dev[r.c->feature] = ConstraintSatisfied(*r.c, data.Cell(i, r.feature)) ? 0 : 1;
      }
    }
    out.deviations.push_back(std::move(dev));
  }
  return out;
}

}  // namespace

RecordSet FilterRecords(const Dataset& data, const FeatureGroup& group, size_t k) {
  RecordSet out;
  if (group.empty()) {
    out.indices.resize(data.rows());
    std::iota(out.indices.begin(), out.indices.end(), 0);
    return out;
  }
  auto cons = Resolve(data, group);
  std::vector<size_t> feasible;
  for (size_t i = 0; i < data.rows(); ++i) {
    bool exact = true;
    bool hard_ok = true;
    for (const auto& r : cons) {
      bool ok = ConstraintSatisfied(*r.c, data.Cell(i, r.feature));
      exact = exact && ok;
      if (!IsSoft(r)) hard_ok = hard_ok && ok;
    }
    if (exact) out.indices.push_back(i);
    if (hard_ok) feasible.push_back(i);
  }
  if (!out.indices.empty()) return out;
  if (feasible.empty()) {
    throw Error(ErrorCode::kNoFeasibleRecord,
                "no record satisfies the hard constraints " +
                    SerializeGroup(group),
                {{"group", ToJson(group)}});
  }
  return Closest(data, cons, feasible, k, /*relax_hard=*/false);
}

RecordSet ClosestRecords(const Dataset& data, const FeatureGroup& group, size_t k) {
  if (data.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "empty dataset");
  std::vector<size_t> all(data.rows());
  std::iota(all.begin(), all.end(), 0);
  return Closest(data, Resolve(data, group), all, k, /*relax_hard=*/true);
}

}  // namespace qx
