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

#include "qx/registry.h"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "qx/common.h"
#include "qx/error.h"
#include "qx/schema.h"

namespace qx {

std::string_view ModalityName(Modality m) {
  switch (m) {
    case Modality::kFeatures: return "Features";
    case Modality::kInstances: return "Instances";
    case Modality::kRules: return "Rules";
    case Modality::kDataSummary: return "DataSummary";
    case Modality::kCounterfactuals: return "Counterfactuals";
  }
  return "Features";
}

std::optional<Modality> ModalityFromName(std::string_view name) {
  for (auto m : {Modality::kFeatures, Modality::kInstances, Modality::kRules,
                 Modality::kDataSummary, Modality::kCounterfactuals}) {
    if (AliasKey(ModalityName(m)) == AliasKey(name)) return m;
  }
  return std::nullopt;
}

const std::vector<std::string>& MetricsForModality(Modality m) {
  static const std::vector<std::string> kFeatures = {"faithfulness",
                                                     "monotonicity"};
  static const std::vector<std::string> kRules = {"fidelity",
                                                  "average_rule_length"};
  static const std::vector<std::string> kExamples = {"diversity",
                                                     "non_representativeness"};
  switch (m) {
    case Modality::kFeatures: return kFeatures;
    case Modality::kRules: return kRules;
    default: return kExamples;
  }
}

namespace {

std::string_view CardinalityName(Cardinality c) {
  switch (c) {
    case Cardinality::kOne: return "one";
    case Cardinality::kMany: return "many";
    case Cardinality::kOptional: return "optional";
  }
  return "one";
}

std::optional<Cardinality> CardinalityFromName(std::string_view s) {
  std::string k = ToLower(Trim(s));
  if (k == "one") return Cardinality::kOne;
  if (k == "many") return Cardinality::kMany;
  if (k == "optional") return Cardinality::kOptional;
  return std::nullopt;
}

// Placeholder names in a template text, in order of appearance.
std::vector<std::string> Placeholders(std::string_view text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    size_t close = text.find('}', pos);
    if (close == std::string_view::npos) break;
    out.emplace_back(text.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

std::vector<std::string> SplitList(std::string_view s) {
  std::vector<std::string> out;
  for (auto& part : Split(s, ',')) {
    std::string t = Trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// " | "-separated fields, trimmed; keeps empty fields.
std::vector<std::string> SplitBar(std::string_view s) {
  std::vector<std::string> out;
  for (auto& part : Split(s, '|')) out.push_back(Trim(part));
  return out;
}

}  // namespace

std::string ExplanationTemplate::Render(
    const std::map<std::string, std::string>& values) const {
  std::string out = text;
  for (const auto& slot : slots) {
    auto it = values.find(slot.name);
    std::string fill;
    if (it == values.end() || it->second.empty()) {
      if (slot.cardinality != Cardinality::kOptional) {
        throw Error(ErrorCode::kTemplateSlotUnfillable,
                    "template slot '" + slot.name + "' needs " +
                        std::string(ModalityName(slot.modality)) + " output",
                    {{"slot", slot.name},
                     {"modality", std::string(ModalityName(slot.modality))}});
      }
      fill = "none";
    } else {
      fill = it->second;
    }
    const std::string key = "{" + slot.name + "}";
    size_t pos = 0;
    while ((pos = out.find(key, pos)) != std::string::npos) {
      out.replace(pos, key.size(), fill);
      pos += fill.size();
    }
  }
  return out;
}

Registry Registry::FromText(std::string_view text) {
  enum class Section { kNone, kTypes, kExplainers, kTemplates };
  Registry reg;
  Section section = Section::kNone;
  ExplanationType* type = nullptr;
  ExplainerRegistration* explainer = nullptr;
  // Templates are attached after parsing so they may precede their types.
  std::vector<std::pair<std::string, ExplanationTemplate>> templates;
  std::vector<size_t> template_lines;
  ExplanationTemplate* tmpl = nullptr;

  auto fail = [](size_t line, const std::string& why) -> Error {
    return Error(ErrorCode::kParseError,
                 "registry line " + std::to_string(line) + ": " + why,
                 {{"line", line}});
  };

  size_t line_no = 0;
  for (const auto& raw : Split(text, '\n')) {
    ++line_no;
    std::string line = Trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail(line_no, "unterminated section header");
      std::string name = ToLower(Trim(line.substr(1, line.size() - 2)));
      if (name == "types") {
        section = Section::kTypes;
      } else if (name == "explainers") {
        section = Section::kExplainers;
      } else if (name == "templates") {
        section = Section::kTemplates;
      } else {
        throw fail(line_no, "unknown section '" + name + "'");
      }
      type = nullptr;
      explainer = nullptr;
      tmpl = nullptr;
      continue;
    }
    size_t colon = line.find(':');
    if (colon == std::string::npos) throw fail(line_no, "expected 'key: value'");
    std::string key = ToLower(Trim(line.substr(0, colon)));
    std::string value = Trim(line.substr(colon + 1));

    switch (section) {
      case Section::kNone:
        throw fail(line_no, "entry outside of a section");
      case Section::kTypes: {
        if (key == "id") {
          reg.types_.emplace_back();
          type = &reg.types_.back();
          type->id = value;
          continue;
        }
        if (!type) throw fail(line_no, "'" + key + "' before 'id'");
        if (key == "label") {
          type->label = value;
        } else if (key == "description") {
          type->description = value;
        } else if (key == "modalities") {
          for (const auto& m : SplitList(value)) {
            auto mod = ModalityFromName(m);
            if (!mod) throw fail(line_no, "unknown modality '" + m + "'");
            type->modalities.push_back(*mod);
          }
        } else if (key == "question") {
          QuestionPattern q;
          size_t arrow = value.find("=>");
          if (arrow == std::string::npos) {
            q.text = value;
          } else {
            q.text = Trim(value.substr(0, arrow));
            auto parts = SplitBar(value.substr(arrow + 2));
            if (parts.size() < 2 || parts.size() > 3) {
              throw fail(line_no,
                         "gold spec must be 'action | interpretation [| "
                         "likelihood]'");
            }
            q.has_gold = true;
            q.action = parts[0];
            q.interpretation = parts[1];
            if (parts.size() == 3) q.likelihood = parts[2];
          }
          if (q.text.empty()) throw fail(line_no, "empty question");
          type->questions.push_back(std::move(q));
        } else if (key == "cue") {
          auto parts = SplitBar(value);
          Cue cue;
          cue.phrase = NormalizeText(parts[0]);
          if (parts.size() > 1) {
            auto w = ParseDouble(parts[1]);
            if (!w || *w <= 0) throw fail(line_no, "cue weight must be > 0");
            cue.weight = *w;
          }
          if (cue.phrase.empty()) throw fail(line_no, "empty cue");
          type->cues.push_back(std::move(cue));
        } else {
          throw fail(line_no, "unknown type key '" + key + "'");
        }
        break;
      }
      case Section::kExplainers: {
        if (key == "id") {
          reg.explainers_.emplace_back();
          explainer = &reg.explainers_.back();
          explainer->id = value;
          continue;
        }
        if (!explainer) throw fail(line_no, "'" + key + "' before 'id'");
        if (key == "for") {
          explainer->type_ids = SplitList(value);
        } else if (key == "modality") {
          auto mod = ModalityFromName(value);
          if (!mod) throw fail(line_no, "unknown modality '" + value + "'");
          explainer->modality = *mod;
        } else if (key == "metrics") {
          explainer->metric_ids = SplitList(value);
        } else if (key == "description") {
          explainer->description = value;
        } else {
          throw fail(line_no, "unknown explainer key '" + key + "'");
        }
        break;
      }
      case Section::kTemplates: {
        if (key == "type") {
          templates.emplace_back(value, ExplanationTemplate{});
          template_lines.push_back(line_no);
          tmpl = &templates.back().second;
          continue;
        }
        if (!tmpl) throw fail(line_no, "'" + key + "' before 'type'");
        if (key == "slot") {
          auto parts = SplitBar(value);
          if (parts.size() != 3) {
            throw fail(line_no, "slot must be 'name | modality | cardinality'");
          }
          auto mod = ModalityFromName(parts[1]);
          if (!mod) throw fail(line_no, "unknown modality '" + parts[1] + "'");
          auto card = CardinalityFromName(parts[2]);
          if (!card) throw fail(line_no, "unknown cardinality '" + parts[2] + "'");
          tmpl->slots.push_back({parts[0], *mod, *card});
        } else if (key == "text") {
          tmpl->text = value;
        } else {
          throw fail(line_no, "unknown template key '" + key + "'");
        }
        break;
      }
    }
  }
  if (reg.types_.empty()) {
    throw Error(ErrorCode::kParseError, "registry defines no explanation types",
                {{"line", line_no}});
  }
  std::set<std::string> seen_templates;
  for (size_t i = 0; i < templates.size(); ++i) {
    const auto& [type_id, t] = templates[i];
    if (!seen_templates.insert(type_id).second) {
      throw Error(ErrorCode::kValidationError,
                  "duplicate template for type '" + type_id + "'",
                  {{"type", type_id}, {"line", template_lines[i]}});
    }
    ExplanationType* target = nullptr;
    for (auto& ty : reg.types_) {
      if (ty.id == type_id) target = &ty;
    }
    if (!target) {
      throw Error(ErrorCode::kValidationError,
                  "template references unknown type '" + type_id + "'",
                  {{"type", type_id}, {"line", template_lines[i]}});
    }
    target->explanation_template = t;
  }
  reg.Validate();
  return reg;
}

Registry Registry::FromJson(const nlohmann::json& j) {
  Registry reg;
  try {
    for (const auto& t : j.at("types")) {
      ExplanationType ty;
      ty.id = t.at("id").get<std::string>();
      ty.label = t.value("label", ty.id);
      ty.description = t.value("description", "");
      for (const auto& m : t.value("modalities", std::vector<std::string>{})) {
        auto mod = ModalityFromName(m);
        if (!mod) throw Error(ErrorCode::kParseError, "unknown modality " + m);
        ty.modalities.push_back(*mod);
      }
      for (const auto& q : t.value("questions", nlohmann::json::array())) {
        QuestionPattern qp;
        if (q.is_string()) {
          qp.text = q.get<std::string>();
        } else {
          qp.text = q.at("text").get<std::string>();
          if (q.contains("interpretation")) {
            qp.has_gold = true;
            qp.action = q.value("action", "");
            qp.interpretation = q.at("interpretation").get<std::string>();
            qp.likelihood = q.value("likelihood", "");
          }
        }
        ty.questions.push_back(std::move(qp));
      }
      for (const auto& c : t.value("cues", nlohmann::json::array())) {
        ty.cues.push_back({NormalizeText(c.at("phrase").get<std::string>()),
                           c.value("weight", 1.0)});
      }
      reg.types_.push_back(std::move(ty));
    }
    for (const auto& e : j.value("explainers", nlohmann::json::array())) {
      ExplainerRegistration reg_e;
      reg_e.id = e.at("id").get<std::string>();
      reg_e.description = e.value("description", "");
      reg_e.type_ids = e.at("for").get<std::vector<std::string>>();
      auto mod = ModalityFromName(e.at("modality").get<std::string>());
      if (!mod) {
        throw Error(ErrorCode::kParseError,
                    "unknown modality " + e.at("modality").dump());
      }
      reg_e.modality = *mod;
      reg_e.metric_ids = e.value("metrics", std::vector<std::string>{});
      reg.explainers_.push_back(std::move(reg_e));
    }
    std::set<std::string> seen;
    for (const auto& t : j.value("templates", nlohmann::json::array())) {
      std::string type_id = t.at("type").get<std::string>();
      if (!seen.insert(type_id).second) {
        throw Error(ErrorCode::kValidationError,
                    "duplicate template for type '" + type_id + "'",
                    {{"type", type_id}});
      }
      ExplanationTemplate tmpl;
      tmpl.text = t.at("text").get<std::string>();
      for (const auto& s : t.at("slots")) {
        auto mod = ModalityFromName(s.at("modality").get<std::string>());
        auto card = CardinalityFromName(s.value("cardinality", "one"));
        if (!mod || !card) {
          throw Error(ErrorCode::kParseError, "bad template slot " + s.dump());
        }
        tmpl.slots.push_back({s.at("name").get<std::string>(), *mod, *card});
      }
      auto it = std::find_if(reg.types_.begin(), reg.types_.end(),
                             [&](const auto& ty) { return ty.id == type_id; });
      if (it == reg.types_.end()) {
        throw Error(ErrorCode::kValidationError,
                    "template references unknown type '" + type_id + "'",
                    {{"type", type_id}});
      }
      it->explanation_template = std::move(tmpl);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed registry JSON: ") + e.what());
  }
  if (reg.types_.empty()) {
    throw Error(ErrorCode::kParseError, "registry defines no explanation types");
  }
  reg.Validate();
  return reg;
}

Registry Registry::Load(const std::filesystem::path& path) {
  std::string text = ReadFile(path);
  std::string trimmed = Trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError,
                  "registry " + path.string() + ": " + e.what(),
                  {{"path", path.string()}, {"byte", e.byte}});
    }
    return FromJson(j);
  }
  return FromText(text);
}

std::filesystem::path DefaultDataDir() {
  if (const char* env = std::getenv("QX_DATA_DIR")) {
    if (std::filesystem::exists(env)) return env;
  }
  if (std::filesystem::exists(QX_BUILD_DATA_DIR "/registry.eo")) {
    return QX_BUILD_DATA_DIR;
  }
  return QX_INSTALL_DATA_DIR;
}

Registry Registry::LoadDefault() {
  return Load(DefaultDataDir() / "registry.eo");
}

void Registry::Validate() const {
  std::set<std::string> type_ids;
  for (const auto& t : types_) {
    if (t.id.empty()) throw Error(ErrorCode::kValidationError, "type with empty id");
    if (!type_ids.insert(t.id).second) {
      throw Error(ErrorCode::kValidationError,
                  "duplicate explanation type id '" + t.id + "'",
                  {{"id", t.id}});
    }
    if (t.questions.empty()) {
      throw Error(ErrorCode::kValidationError,
                  "explanation type '" + t.id + "' has no question patterns",
                  {{"id", t.id}});
    }
    const auto& tmpl = t.explanation_template;
    if (tmpl.text.empty()) {
      throw Error(ErrorCode::kValidationError,
                  "explanation type '" + t.id + "' has no template",
                  {{"id", t.id}});
    }
    std::set<std::string> slot_names;
    for (const auto& s : tmpl.slots) {
      slot_names.insert(s.name);
      if (std::find(t.modalities.begin(), t.modalities.end(), s.modality) ==
          t.modalities.end()) {
        throw Error(ErrorCode::kValidationError,
                    "template slot '" + s.name + "' of '" + t.id +
                        "' uses undeclared modality " +
                        std::string(ModalityName(s.modality)),
                    {{"id", t.id}, {"slot", s.name}});
      }
    }
    for (const auto& p : Placeholders(tmpl.text)) {
      if (!slot_names.count(p)) {
        throw Error(ErrorCode::kValidationError,
                    "template of '" + t.id + "' references undeclared slot '" +
                        p + "'",
                    {{"id", t.id}, {"slot", p}});
      }
    }
  }
  std::set<std::string> explainer_ids;
  for (const auto& e : explainers_) {
    if (!explainer_ids.insert(e.id).second) {
      throw Error(ErrorCode::kValidationError,
                  "duplicate explainer id '" + e.id + "'", {{"id", e.id}});
    }
    if (e.type_ids.empty()) {
      throw Error(ErrorCode::kValidationError,
                  "explainer '" + e.id + "' serves no explanation type",
                  {{"id", e.id}});
    }
    for (const auto& t : e.type_ids) {
      if (!type_ids.count(t)) {
        throw Error(ErrorCode::kValidationError,
                    "explainer '" + e.id + "' references unknown type '" + t +
                        "'",
                    {{"id", e.id}, {"type", t}});
      }
    }
    const auto& allowed = MetricsForModality(e.modality);
    if (e.metric_ids.empty()) {
      throw Error(ErrorCode::kValidationError,
                  "explainer '" + e.id + "' binds no metrics", {{"id", e.id}});
    }
    for (const auto& m : e.metric_ids) {
      if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
        throw Error(ErrorCode::kValidationError,
                    "metric '" + m + "' does not apply to modality " +
                        std::string(ModalityName(e.modality)),
                    {{"id", e.id}, {"metric", m}});
      }
    }
  }
}

std::string Registry::ToText() const {
  std::string out = "[types]\n";
  for (const auto& t : types_) {
    out += "\nid: " + t.id + "\n";
    out += "label: " + t.label + "\n";
    if (!t.description.empty()) out += "description: " + t.description + "\n";
    if (!t.modalities.empty()) {
      out += "modalities: ";
      for (size_t i = 0; i < t.modalities.size(); ++i) {
        if (i) out += ", ";
        out += ModalityName(t.modalities[i]);
      }
      out += "\n";
    }
    for (const auto& q : t.questions) {
      out += "question: " + q.text;
      if (q.has_gold) {
        out += " => " + q.action + " | " + q.interpretation;
        if (!q.likelihood.empty()) out += " | " + q.likelihood;
      }
      out += "\n";
    }
    for (const auto& c : t.cues) {
      out += "cue: " + c.phrase + " | " + FormatExact(c.weight) + "\n";
    }
  }
  out += "\n[explainers]\n";
  for (const auto& e : explainers_) {
    out += "\nid: " + e.id + "\n";
    if (!e.description.empty()) out += "description: " + e.description + "\n";
    out += "for: ";
    for (size_t i = 0; i < e.type_ids.size(); ++i) {
      if (i) out += ", ";
      out += e.type_ids[i];
    }
    out += "\nmodality: " + std::string(ModalityName(e.modality)) + "\n";
    out += "metrics: ";
    for (size_t i = 0; i < e.metric_ids.size(); ++i) {
      if (i) out += ", ";
      out += e.metric_ids[i];
    }
    out += "\n";
  }
  out += "\n[templates]\n";
  for (const auto& t : types_) {
    out += "\ntype: " + t.id + "\n";
    for (const auto& s : t.explanation_template.slots) {
      out += "slot: " + s.name + " | " + std::string(ModalityName(s.modality)) +
             " | " + std::string(CardinalityName(s.cardinality)) + "\n";
    }
    out += "text: " + t.explanation_template.text + "\n";
  }
  return out;
}

nlohmann::json Registry::ToJson() const {
  nlohmann::json types = nlohmann::json::array();
  nlohmann::json templates = nlohmann::json::array();
  for (const auto& t : types_) {
    nlohmann::json mods = nlohmann::json::array();
    for (auto m : t.modalities) mods.push_back(std::string(ModalityName(m)));
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : t.questions) {
      nlohmann::json jq = {{"text", q.text}};
      if (q.has_gold) {
        jq["action"] = q.action;
        jq["interpretation"] = q.interpretation;
        jq["likelihood"] = q.likelihood;
      }
      questions.push_back(std::move(jq));
    }
    nlohmann::json cues = nlohmann::json::array();
    for (const auto& c : t.cues) {
      cues.push_back({{"phrase", c.phrase}, {"weight", c.weight}});
    }
    types.push_back({{"id", t.id},
                     {"label", t.label},
                     {"description", t.description},
                     {"modalities", mods},
                     {"questions", questions},
                     {"cues", cues}});
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : t.explanation_template.slots) {
      slots.push_back({{"name", s.name},
                       {"modality", std::string(ModalityName(s.modality))},
                       {"cardinality", std::string(CardinalityName(s.cardinality))}});
    }
    templates.push_back({{"type", t.id},
                         {"slots", slots},
                         {"text", t.explanation_template.text}});
  }
  nlohmann::json explainers = nlohmann::json::array();
  for (const auto& e : explainers_) {
    explainers.push_back({{"id", e.id},
                          {"description", e.description},
                          {"for", e.type_ids},
                          {"modality", std::string(ModalityName(e.modality))},
                          {"metrics", e.metric_ids}});
  }
  return {{"types", types}, {"explainers", explainers}, {"templates", templates}};
}

const ExplanationType* Registry::FindType(std::string_view id) const {
  for (const auto& t : types_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const ExplanationType& Registry::Type(std::string_view id) const {
  const auto* t = FindType(id);
  if (!t) {
    throw Error(ErrorCode::kUnknownType,
                "unknown explanation type '" + std::string(id) + "'",
                {{"type", std::string(id)}});
  }
  return *t;
}

std::vector<ExplainerRegistration> Registry::ExplainersForType(
    std::string_view id) const {
  Type(id);
  std::vector<ExplainerRegistration> out;
  for (const auto& e : explainers_) {
    if (std::find(e.type_ids.begin(), e.type_ids.end(), id) != e.type_ids.end()) {
      out.push_back(e);
    }
  }
  return out;
}

const ExplanationTemplate& Registry::TemplateForType(std::string_view id) const {
  return Type(id).explanation_template;
}

}  // namespace qx
