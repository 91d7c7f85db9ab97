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

#ifndef QX_DATASET_H_
#define QX_DATASET_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qx/interp.h"
#include "qx/schema.h"

namespace qx {

using Row = std::vector<double>;
using Matrix = std::vector<Row>;

struct ImputationRecord {
  std::string column;
  size_t row = 0;
  double original = 0.0;
  double imputed = 0.0;
};

// Immutable after load. The numeric matrix holds the schema's model
// features in schema order; categorical columns are kept as strings and are
// used only for filtering.
class Dataset {
 public:
  Dataset() = default;

  // `impute_columns` defaults to the schema's impute_zero flags.
  static Dataset LoadCsv(const std::filesystem::path& path, const Schema& schema,
                         std::optional<std::vector<std::string>> impute_columns =
                             std::nullopt);
  static Dataset FromCsvText(std::string_view text, const Schema& schema,
                             std::optional<std::vector<std::string>> impute_columns,
                             std::string source);
  // In-memory construction (tests, benchmarks). No imputation.
  static Dataset FromMatrix(const Schema& schema, Matrix x, std::vector<int> y);

  const Schema& schema() const { return schema_; }
  size_t rows() const { return x_.size(); }
  size_t dims() const { return schema_.model_features().size(); }
  const Matrix& x() const { return x_; }
  const Row& row(size_t i) const { return x_.at(i); }
  const std::vector<int>& y() const { return y_; }
  std::vector<std::string> feature_names() const;  // model columns

  // Value of schema feature `feature` on row `i`.
  CellValue Cell(size_t i, size_t feature) const;
  // Model column of a schema feature; nullopt for categoricals.
  std::optional<size_t> ColumnOf(size_t feature) const;

  double ColumnMin(size_t col) const { return min_.at(col); }
  double ColumnMax(size_t col) const { return max_.at(col); }
  double ColumnMedian(size_t col) const { return median_.at(col); }
  Row Medians() const { return median_; }

  const std::vector<ImputationRecord>& imputation_log() const { return log_; }
  // Per column: {count, median} of imputed cells.
  nlohmann::json ImputationSummary() const;
  const std::string& source() const { return source_; }
  const std::string& hash() const { return hash_; }  // sha256 of the CSV

  Dataset Subset(const std::vector<size_t>& indices) const;

 private:
  void ComputeStats();

  Schema schema_;
  Matrix x_;
  std::vector<std::vector<std::string>> categorical_;  // [row][cat feature]
  std::vector<size_t> cat_features_;                   // schema indices
  std::vector<int> y_;
  Row min_, max_, median_;
  std::vector<ImputationRecord> log_;
  std::map<std::string, double> imputed_median_;
  std::string source_;
  std::string hash_;
};

// Median of `v`; mean of the middle pair for even sizes.
double Median(std::vector<double> v);

struct RecordSet {
  std::vector<size_t> indices;
  bool approximate = false;
  // Per returned row: |value - target| for each soft constraint (original
  // units), or the gap to a violated hard constraint when relaxed.
  std::vector<std::map<std::string, double>> deviations;
};

inline constexpr size_t kClosestRecords = 5;

// Exact matches when any exist; otherwise the k rows closest to the EQ
// targets (range-normalized L1) among rows that satisfy every hard
// constraint (inequalities, ranges, categoricals). NoFeasibleRecord when the
// hard constraints exclude every row. An empty group returns all rows.
RecordSet FilterRecords(const Dataset& data, const FeatureGroup& group,
                        size_t k = kClosestRecords);

// Treats every constraint as soft; never fails on a non-empty dataset.
RecordSet ClosestRecords(const Dataset& data, const FeatureGroup& group,
                         size_t k = kClosestRecords);

}  // namespace qx

#endif  // QX_DATASET_H_
