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

#ifndef QX_SCHEMA_H_
#define QX_SCHEMA_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qx {

enum class FeatureType { kNumeric, kCategorical };

struct Category {
  std::string value;
  std::vector<std::string> aliases;
};

struct FeatureSpec {
  std::string name;
  std::string label;  // display name used in questions and explanations
  FeatureType type = FeatureType::kNumeric;
  std::vector<std::string> aliases;
  std::string unit;
  bool impute_zero = false;
  bool immutable = false;
  std::optional<double> min;
  std::optional<double> max;
  int decimals = 2;
  // Categorical only.
  std::vector<Category> categories;
  // A categorical column missing from the CSV is filled with this value.
  std::optional<std::string> default_value;

  bool is_numeric() const { return type == FeatureType::kNumeric; }
};

struct TargetSpec {
  std::string column;
  std::string label;           // e.g. "Diabetes"
  std::string positive_label;  // label of class 1
  std::string negative_label;  // label of class 0
  std::vector<std::string> aliases;
};

// Dataset schema: feature names, types, aliases and units. Feature order is
// column order of the dataset matrix.
class Schema {
 public:
  Schema() = default;
  Schema(std::string name, std::vector<FeatureSpec> features, TargetSpec target);

  static Schema FromJson(const nlohmann::json& j);
  static Schema Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  const std::string& name() const { return name_; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(size_t i) const { return features_.at(i); }
  size_t size() const { return features_.size(); }
  const TargetSpec& target() const { return target_; }

  // Name, label or alias; case, space, underscore and hyphen insensitive.
  std::optional<size_t> Resolve(std::string_view token) const;
  size_t IndexOf(std::string_view name) const;  // throws SchemaMismatch
  // Category index of `token` for a categorical feature.
  std::optional<size_t> ResolveCategory(size_t feature,
                                        std::string_view token) const;
  bool IsTargetMention(std::string_view token) const;
  // Columns fed to models: numeric features in schema order.
  const std::vector<size_t>& model_features() const { return model_features_; }

 private:
  std::string name_;
  std::vector<FeatureSpec> features_;
  TargetSpec target_;
  std::vector<size_t> model_features_;
};

// Key used for alias matching: lowercase with spaces, '_' and '-' removed.
std::string AliasKey(std::string_view s);

}  // namespace qx

#endif  // QX_SCHEMA_H_
