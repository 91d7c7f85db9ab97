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

#include "qx/schema.h"

#include <cctype>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

std::string AliasKey(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isspace(c) || c == '_' || c == '-' || c == '\'' || c == '"') {
      continue;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

Schema::Schema(std::string name, std::vector<FeatureSpec> features,
               TargetSpec target)
    : name_(std::move(name)),
      features_(std::move(features)),
      target_(std::move(target)) {
  for (size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].label.empty()) features_[i].label = features_[i].name;
    if (features_[i].is_numeric()) model_features_.push_back(i);
  }
}

Schema Schema::FromJson(const nlohmann::json& j) {
  try {
    std::vector<FeatureSpec> features;
    for (const auto& f : j.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      spec.label = f.value("label", spec.name);
      std::string type = f.value("type", "numeric");
      if (type == "numeric") {
        spec.type = FeatureType::kNumeric;
      } else if (type == "categorical") {
        spec.type = FeatureType::kCategorical;
      } else {
        throw Error(ErrorCode::kSchemaMismatch,
                    "unknown feature type '" + type + "' for " + spec.name);
      }
      spec.aliases = f.value("aliases", std::vector<std::string>{});
      spec.unit = f.value("unit", "");
      spec.impute_zero = f.value("impute_zero", false);
      spec.immutable = f.value("immutable", false);
      if (f.contains("min")) spec.min = f.at("min").get<double>();
      if (f.contains("max")) spec.max = f.at("max").get<double>();
      spec.decimals = f.value("decimals", 2);
      if (f.contains("categories")) {
        for (const auto& c : f.at("categories")) {
          Category cat;
          if (c.is_string()) {
            cat.value = c.get<std::string>();
          } else {
            cat.value = c.at("value").get<std::string>();
            cat.aliases = c.value("aliases", std::vector<std::string>{});
          }
          spec.categories.push_back(std::move(cat));
        }
      }
      if (f.contains("default")) spec.default_value = f.at("default");
      if (spec.type == FeatureType::kCategorical && spec.categories.empty()) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "categorical feature " + spec.name + " has no categories");
      }
      features.push_back(std::move(spec));
    }
    const auto& t = j.at("target");
    TargetSpec target;
    target.column = t.at("column").get<std::string>();
    target.label = t.value("label", target.column);
    target.positive_label = t.value("positive", target.label);
    target.negative_label = t.value("negative", "No " + target.label);
    target.aliases = t.value("aliases", std::vector<std::string>{});
    return Schema(j.value("name", "dataset"), std::move(features),
                  std::move(target));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch,
                std::string("malformed schema: ") + e.what());
  }
}

Schema Schema::Load(const std::filesystem::path& path) {
  std::string text = ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchemaMismatch,
                "schema " + path.string() + " is not valid JSON: " + e.what(),
                {{"path", path.string()}, {"byte", e.byte}});
  }
  return FromJson(j);
}

nlohmann::json Schema::ToJson() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json o = {{"name", f.name},
                        {"label", f.label},
                        {"type", f.is_numeric() ? "numeric" : "categorical"}};
    if (!f.aliases.empty()) o["aliases"] = f.aliases;
    if (!f.unit.empty()) o["unit"] = f.unit;
    if (f.impute_zero) o["impute_zero"] = true;
    if (f.immutable) o["immutable"] = true;
    if (f.min) o["min"] = *f.min;
    if (f.max) o["max"] = *f.max;
    o["decimals"] = f.decimals;
    if (!f.categories.empty()) {
      nlohmann::json cats = nlohmann::json::array();
      for (const auto& c : f.categories) {
        cats.push_back({{"value", c.value}, {"aliases", c.aliases}});
      }
      o["categories"] = cats;
    }
    if (f.default_value) o["default"] = *f.default_value;
    features.push_back(std::move(o));
  }
  return {{"name", name_},
          {"features", features},
          {"target",
           {{"column", target_.column},
            {"label", target_.label},
            {"positive", target_.positive_label},
            {"negative", target_.negative_label},
            {"aliases", target_.aliases}}}};
}

std::optional<size_t> Schema::Resolve(std::string_view token) const {
  const std::string key = AliasKey(token);
  if (key.empty()) return std::nullopt;
  for (size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    if (AliasKey(f.name) == key || AliasKey(f.label) == key) return i;
    for (const auto& a : f.aliases) {
      if (a.find('#') == std::string::npos && AliasKey(a) == key) return i;
    }
  }
  return std::nullopt;
}

size_t Schema::IndexOf(std::string_view name) const {
  auto idx = Resolve(name);
  if (!idx) {
    throw Error(ErrorCode::kSchemaMismatch,
                "feature '" + std::string(name) + "' is not in the schema",
                {{"feature", std::string(name)}});
  }
  return *idx;
}

std::optional<size_t> Schema::ResolveCategory(size_t feature,
                                              std::string_view token) const {
  const auto& f = features_.at(feature);
  const std::string key = AliasKey(token);
  for (size_t c = 0; c < f.categories.size(); ++c) {
    if (AliasKey(f.categories[c].value) == key) return c;
    for (const auto& a : f.categories[c].aliases) {
      if (AliasKey(a) == key) return c;
    }
  }
  return std::nullopt;
}

bool Schema::IsTargetMention(std::string_view token) const {
  const std::string key = AliasKey(token);
  if (key.empty()) return false;
  if (key == AliasKey(target_.label) || key == AliasKey(target_.column) ||
      key == AliasKey(target_.positive_label)) {
    return true;
  }
  for (const auto& a : target_.aliases) {
    if (AliasKey(a) == key) return true;
  }
  return false;
}

}  // namespace qx
