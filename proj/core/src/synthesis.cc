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

#include "qx/synthesis.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "qx/common.h"
#include "qx/error.h"
#include "qx/rules.h"

namespace qx {

std::string ExplanationTuple::Render() const {
  return provenance.empty() ? text : text + "\n\n" + provenance;
}

nlohmann::json ExplanationTuple::ToJson() const {
  return {{"text", text},
          {"explanation_type", explanation_type},
          {"explainers", explainers},
          {"rq", qx::ToJson(rq)},
          {"uq", uq},
          {"metrics", metrics},
          {"run_id", run_id},
          {"mode", mode},
          {"provenance", provenance},
          {"slot_provenance", slot_provenance}};
}

ExplanationTuple ExplanationTuple::FromJson(const nlohmann::json& j) {
  try {
    ExplanationTuple t;
    t.text = j.at("text");
    t.explanation_type = j.at("explanation_type");
    t.explainers = j.at("explainers").get<std::vector<std::string>>();
    t.rq = ReframedQuestionFromJson(j.at("rq"));
    t.uq = j.at("uq");
    t.metrics = j.value("metrics", nlohmann::json::array());
    t.run_id = j.value("run_id", "");
    t.mode = j.value("mode", "template");
    t.provenance = j.value("provenance", "");
    t.slot_provenance = j.value("slot_provenance", nlohmann::json::object());
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed explanation: ") + e.what());
  }
}

bool ExplanationTuple::SameContent(const ExplanationTuple& o) const {
  // Metric entries name their directories; compare them without.
  auto strip = [](nlohmann::json m) {
    for (auto& e : m) e.erase("dir");
    return m;
  };
  return text == o.text && explanation_type == o.explanation_type &&
         explainers == o.explainers && rq == o.rq && uq == o.uq && mode == o.mode &&
         strip(metrics) == strip(o.metrics);
}

namespace {

// One rankable piece of explainer output.
struct Item {
  std::string text;
  double weight = 0.0;
  double tiebreak = 0.0;  // primary metric of the producing result
  std::string dir;
  const ExplainerResult* result = nullptr;
  size_t row = 0;
};

void Rank(std::vector<Item>& items) {
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.tiebreak > b.tiebreak;
  });
}

double Cell(const Table& t, size_t row, std::string_view col) {
  auto v = ParseDouble(t.rows.at(row).at(t.Column(col)));
  return v ? *v : std::nan("");
}

const std::string& Text(const Table& t, size_t row, std::string_view col) {
  return t.rows.at(row).at(t.Column(col));
}

std::string Signed(double v) {
  std::string s = FormatDisplay(v);
  return (s[0] == '-' || s == "0") ? s : "+" + s;
}

class Writer {
 public:
  Writer(const Schema& schema, size_t top_c, bool many_groups)
      : schema_(schema), top_c_(top_c), many_groups_(many_groups) {}

  std::string Label(std::string_view feature) const {
    auto i = schema_.Resolve(feature);
    return i ? schema_.feature(*i).label : std::string(feature);
  }
  std::string Value(std::string_view feature, double v) const {
    auto i = schema_.Resolve(feature);
    std::string s = FormatDisplay(v);
    if (i && !schema_.feature(*i).unit.empty()) s += " " + schema_.feature(*i).unit;
    return s;
  }
  std::string Class(int label) const {
    return label == 1 ? schema_.target().positive_label : schema_.target().negative_label;
  }
  std::string Suffix(const ExplainerResult& r) const {
    return many_groups_ ? " [" + Text(r.output, 0, "group") + "]" : "";
  }
  std::string Interval(const FeatureConstraint& c) const {
    std::string f = Label(c.feature);
    bool lo = std::isfinite(c.lower), hi = std::isfinite(c.upper);
    if (lo && hi) {
      return f + " between " + Value(c.feature, c.lower) + " and " + Value(c.feature, c.upper);
    }
    if (hi) return f + " below " + Value(c.feature, c.upper);
    if (lo) return f + " of at least " + Value(c.feature, c.lower);
    return f + " of any value";
  }
  std::string PositiveProbability(double p) const {
    return "P(" + schema_.target().positive_label + ") = " + FormatDisplay(p);
  }
  size_t top_c() const { return top_c_; }

  // Top-C items joined with "; ", recording which directories fed the slot.
  std::string Join(std::vector<Item> items, std::set<std::string>& dirs) const {
    Rank(items);
    if (items.size() > top_c_) items.resize(top_c_);
    std::string out;
    for (const auto& it : items) {
      if (!out.empty()) out += "; ";
      out += it.text;
      dirs.insert(it.dir);
    }
    return out;
  }

 private:
  const Schema& schema_;
  size_t top_c_;
  bool many_groups_;
};

double PrimaryMetric(const ExplainerResult& r) {
  for (const auto& m : r.metrics) {
    if (m.value) return *m.value;
  }
  return 0.0;
}

// --- per-modality renderers -------------------------------------------------

std::vector<Item> AttributionItems(const ExplainerResult& r, const Writer& w, int side) {
  // side: +1 facts (toward the predicted class), -1 foils.
  std::vector<Item> items;
  const Table& t = r.output;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (Text(t, i, "instance") != "mean") continue;
    double phi = Cell(t, i, "phi");
    int predicted = static_cast<int>(Cell(t, i, "predicted_label"));
    double toward = predicted == 1 ? phi : -phi;
    // Attributions that display as 0 say nothing.
    if (FormatDisplay(std::fabs(phi)) == "0" || (side > 0) != (toward > 0)) continue;
    Item it;
    it.text = w.Label(Text(t, i, "feature")) + " (" + Signed(phi) + ")" + w.Suffix(r);
    it.weight = std::fabs(phi);
    it.tiebreak = PrimaryMetric(r);
    it.dir = r.dir;
    it.result = &r;
    it.row = i;
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<Item> RuleItems(const ExplainerResult& r, const Writer& w, const Schema& schema) {
  std::vector<Item> items;
  const Table& t = r.output;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    Rule rule = ParseRule(Text(t, i, "rule"), schema);
    std::string cond;
    for (const auto& a : rule.antecedents) {
      if (!cond.empty()) cond += " and ";
      cond += w.Interval(a);
    }
    if (cond.empty()) cond = "always";
    size_t coverage = static_cast<size_t>(Cell(t, i, "coverage"));
    Item it;
    it.text = "IF " + cond + " THEN " + w.Class(rule.label) + " (covers " +
              std::to_string(coverage) + " records)" + w.Suffix(r);
    // Rules covering the asked-about records first, then training coverage.
    it.weight = Cell(t, i, "focus_coverage") * 1e6 + static_cast<double>(coverage);
    it.tiebreak = PrimaryMetric(r);
    it.dir = r.dir;
    it.result = &r;
    it.row = i;
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<Item> PrototypeItems(const ExplainerResult& r, const Writer& w,
                                 const std::vector<std::string>& features) {
  std::vector<Item> items;
  const Table& t = r.output;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    std::string vals;
    for (const auto& f : features) {
      if (!vals.empty()) vals += ", ";
      vals += w.Label(f) + " " + w.Value(f, Cell(t, i, f));
    }
    Item it;
    it.text = "record " + Text(t, i, "row") + " (weight " + FormatDisplay(Cell(t, i, "weight")) +
              "; " + vals + "; " + w.Class(static_cast<int>(Cell(t, i, "label"))) + ")" +
              w.Suffix(r);
    it.weight = Cell(t, i, "weight");
    it.tiebreak = -PrimaryMetric(r);
    it.dir = r.dir;
    it.result = &r;
    it.row = i;
    items.push_back(std::move(it));
  }
  return items;
}

struct CounterfactualView {
  std::vector<Item> originals;
  std::vector<Item> counterfactuals;
  std::vector<Item> changed;
};

CounterfactualView CounterfactualItems(const ExplainerResult& r, const Writer& w,
                                       const std::vector<std::string>& features) {
  CounterfactualView v;
  const Table& t = r.output;
  std::optional<size_t> original;
  std::vector<size_t> cfs;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (Text(t, i, "kind") == "original") {
      original = i;
    } else {
      cfs.push_back(i);
    }
  }
  // Rank by proximity and keep top-C before describing the original, so that
  // it lists exactly the features the shown counterfactuals change.
  std::stable_sort(cfs.begin(), cfs.end(), [&](size_t a, size_t b) {
    return Cell(t, a, "proximity") < Cell(t, b, "proximity");
  });
  if (cfs.size() > w.top_c()) cfs.resize(w.top_c());
  std::vector<std::string> changed;
  for (size_t i : cfs) {
    std::string desc;
    for (const auto& f : features) {
      double d = Cell(t, i, "delta_" + f);
      if (d == 0.0) continue;
      if (std::find(changed.begin(), changed.end(), f) == changed.end()) changed.push_back(f);
      if (!desc.empty()) desc += " and ";
      desc += w.Label(f) + " " + w.Value(f, Cell(t, i, f)) + " (" + Signed(d) + ")";
    }
    Item it;
    it.text = desc + " gives " + w.Class(static_cast<int>(Cell(t, i, "label"))) + " (" +
              w.PositiveProbability(Cell(t, i, "probability")) + ")" + w.Suffix(r);
    it.weight = -Cell(t, i, "proximity");
    it.dir = r.dir;
    it.result = &r;
    it.row = i;
    v.counterfactuals.push_back(std::move(it));
  }
  if (original) {
    size_t i = *original;
    std::string vals;
    for (const auto& f : changed) {
      if (!vals.empty()) vals += ", ";
      vals += w.Label(f) + " " + w.Value(f, Cell(t, i, f));
    }
    Item it;
    it.text = "record " + Text(t, i, "row") + " (" + (vals.empty() ? "" : vals + "; ") +
              "predicted " + w.Class(static_cast<int>(Cell(t, i, "label"))) + ", " +
              w.PositiveProbability(Cell(t, i, "probability")) + ")" + w.Suffix(r);
    it.dir = r.dir;
    it.result = &r;
    it.row = i;
    v.originals.push_back(std::move(it));
  }
  for (size_t k = 0; k < changed.size(); ++k) {
    Item it;
    it.text = w.Label(changed[k]);
    it.weight = -static_cast<double>(k);  // first-changed order
    it.dir = r.dir;
    it.result = &r;
    v.changed.push_back(std::move(it));
  }
  return v;
}

std::string SummaryText(const ExplainerResult& r, const Writer& w) {
  const Table& t = r.output;
  if (t.rows.empty()) return "";
  std::string group = Text(t, 0, "group");
  std::string count = Text(t, 0, "count");
  std::string positives = Text(t, 0, "positives");
  std::string out = "the " + count + " records" +
                    (group == "all records" ? std::string() : " matching " + group) + " (" +
                    positives + " with " + w.Class(1) + ")";
  if (count == "0") return out + " have no statistics";
  out += " have";
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const std::string& f = Text(t, i, "feature");
    out += i ? ", " : " ";
    out += "mean " + w.Label(f) + " " + w.Value(f, Cell(t, i, "mean")) + " (SD " +
           FormatDisplay(Cell(t, i, "sd")) + ")";
  }
  return out;
}

std::string JoinUnique(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  std::set<std::string> seen;
  for (const auto& p : parts) {
    if (p.empty() || !seen.insert(p).second) continue;
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

ExplanationTuple Synthesize(const DelegateRun& run, const Registry& registry,
                            const Schema& schema, size_t top_c) {
  std::vector<const ExplainerResult*> ok;
  for (const auto& r : run.results) {
    if (r.ok) ok.push_back(&r);
  }
  if (ok.empty()) {
    throw Error(ErrorCode::kNoOutputs, "run " + run.run_id + " has no successful explainer output",
                {{"run_id", run.run_id}});
  }
  const auto& tmpl = registry.TemplateForType(run.explanation_type);
  std::vector<std::string> features;
  for (size_t f : schema.model_features()) features.push_back(schema.feature(f).name);
  Writer w(schema, top_c, run.groups.size() > 1);

  ExplanationTuple tuple;
  tuple.explanation_type = run.explanation_type;
  tuple.rq = run.rq;
  tuple.uq = run.rq.question;
  tuple.run_id = run.run_id;

  std::map<std::string, std::string> values;
  for (const auto& slot : tmpl.slots) {
    std::vector<const ExplainerResult*> rs;
    for (const auto* r : ok) {
      if (r->modality == slot.modality) rs.push_back(r);
    }
    if (rs.empty()) continue;
    std::set<std::string> dirs;
    std::string value;
    switch (slot.modality) {
      case Modality::kFeatures: {
        std::vector<Item> items;
        int side = slot.name == "foils" ? -1 : 1;
        for (const auto* r : rs) {
          auto v = AttributionItems(*r, w, side);
          items.insert(items.end(), v.begin(), v.end());
        }
        value = w.Join(items, dirs);
        break;
      }
      case Modality::kRules: {
        std::vector<Item> items;
        for (const auto* r : rs) {
          auto v = RuleItems(*r, w, schema);
          items.insert(items.end(), v.begin(), v.end());
        }
        value = w.Join(items, dirs);
        break;
      }
      case Modality::kInstances: {
        if (slot.name == "focus") {
          std::vector<std::string> groups;
          for (const auto* r : rs) {
            if (r->output.rows.empty()) continue;
            groups.push_back(Text(r->output, 0, "group"));
            dirs.insert(r->dir);
          }
          value = JoinUnique(groups, "; ");
          break;
        }
        std::vector<Item> items;
        for (const auto* r : rs) {
          auto v = PrototypeItems(*r, w, features);
          items.insert(items.end(), v.begin(), v.end());
        }
        value = w.Join(items, dirs);
        break;
      }
      case Modality::kCounterfactuals: {
        std::vector<Item> items;
        std::vector<std::string> changed;
        for (const auto* r : rs) {
          auto v = CounterfactualItems(*r, w, features);
          if (slot.name == "original_instance") {
            items.insert(items.end(), v.originals.begin(), v.originals.end());
          } else if (slot.name == "changed_features") {
            for (auto& it : v.changed) {
              changed.push_back(it.text);
              dirs.insert(it.dir);
            }
          } else {
            items.insert(items.end(), v.counterfactuals.begin(), v.counterfactuals.end());
          }
        }
        if (slot.name == "changed_features") {
          value = JoinUnique(changed, ", ");
        } else if (slot.name == "original_instance") {
          for (const auto& it : items) {
            if (!value.empty()) value += "; ";
            value += it.text;
            dirs.insert(it.dir);
          }
        } else {
          // Each result already keeps its top-C; rank across groups again.
          value = w.Join(items, dirs);
        }
        break;
      }
      case Modality::kDataSummary: {
        std::vector<std::string> parts;
        for (const auto* r : rs) {
          parts.push_back(SummaryText(*r, w));
          dirs.insert(r->dir);
        }
        value = JoinUnique(parts, "; ");
        break;
      }
    }
    if (!value.empty()) {
      values[slot.name] = value;
      tuple.slot_provenance[slot.name] = std::vector<std::string>(dirs.begin(), dirs.end());
    }
  }
  tuple.text = tmpl.Render(values);

  std::vector<std::string> prov;
  for (const auto* r : ok) {
    if (std::find(tuple.explainers.begin(), tuple.explainers.end(), r->explainer) ==
        tuple.explainers.end()) {
      tuple.explainers.push_back(r->explainer);
    }
    prov.push_back(r->explainer + " (" + r->dir + ")");
    nlohmann::json m = nlohmann::json::object();
    for (const auto& mr : r->metrics) {
      m[mr.metric] = mr.value ? nlohmann::json(*mr.value) : nlohmann::json(nullptr);
    }
    tuple.metrics.push_back({{"explainer", r->explainer},
                             {"dir", r->dir},
                             {"group", SerializeGroup(r->group)},
                             {"metrics", m}});
  }
  std::string p;
  for (const auto& s : prov) p += (p.empty() ? "" : "; ") + s;
  tuple.provenance = "Provenance: run " + run.run_id + "; " + p;
  return tuple;
}

std::string BuildSynthesisPrompt(const DelegateRun& run, const Registry& registry,
                                 const Schema& schema, size_t top_c) {
  const auto& tmpl = registry.TemplateForType(run.explanation_type);
  std::string p =
      "Answer the user's question about a clinical prediction model using only "
      "the explainer outputs below. Follow the answer template and do not "
      "introduce numbers that are not in the outputs.\n\n";
  p += "Question: " + run.rq.question + "\n";
  p += "Explanation type: " + run.explanation_type + "\n";
  p += "Template: " + tmpl.text + "\n";
  p += "Target: " + schema.target().label + "\n";
  p += "Feature groups:\n";
  for (const auto& g : run.groups) {
    p += "- " + (g.empty() ? std::string("all records") : SerializeGroup(g)) + "\n";
  }
  p += "\nExplainer outputs (top " + std::to_string(top_c) + " rows each):\n";
  for (const auto& r : run.results) {
    if (!r.ok) continue;
    p += "\n[" + r.explainer + ", " + std::string(ModalityName(r.modality)) + "]\n";
    Table t;
    t.header = r.output.header;
    for (size_t i = 0; i < r.output.rows.size() && t.rows.size() < top_c; ++i) {
      t.rows.push_back(r.output.rows[i]);
    }
    // Attribution tables: send the aggregated rows, largest |phi| first.
    if (r.modality == Modality::kFeatures) {
      t.rows.clear();
      std::vector<std::vector<std::string>> mean_rows;
      for (const auto& row : r.output.rows) {
        if (row[r.output.Column("instance")] == "mean") mean_rows.push_back(row);
      }
      size_t phi = r.output.Column("phi");
      std::stable_sort(mean_rows.begin(), mean_rows.end(), [&](const auto& a, const auto& b) {
        return std::fabs(ParseDouble(a[phi]).value_or(0)) >
               std::fabs(ParseDouble(b[phi]).value_or(0));
      });
      for (size_t i = 0; i < mean_rows.size() && i < top_c; ++i) t.rows.push_back(mean_rows[i]);
    }
    p += t.ToCsv();
  }
  return p;
}

ExplanationTuple LlmSynthesize(const DelegateRun& run, const Registry& registry,
                               const Schema& schema, const LlmEndpoint& endpoint,
                               size_t top_c) {
  ExplanationTuple base = Synthesize(run, registry, schema, top_c);
  try {
    std::string prompt = BuildSynthesisPrompt(run, registry, schema, top_c);
    std::string text = ChatComplete(
        endpoint, "You write short, faithful explanations of model behaviour.", prompt);
    if (Trim(text).empty()) {
      throw Error(ErrorCode::kEndpointError, "LLM returned an empty answer");
    }
    base.text = Trim(text);
    base.mode = "llm";
  } catch (const Error&) {
    base.mode = "llm-fallback";
  }
  return base;
}

nlohmann::json GroundingReport::ToJson() const {
  return {{"score", score}, {"tokens", tokens}, {"flagged", flagged}};
}

std::vector<std::string> NumericTokens(std::string_view s) {
  auto word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    bool glued = false;
    if (i > 0) {
      char prev = s[i - 1];
      if (word(prev) || prev == '.') glued = true;
      if ((prev == '-' || prev == '+') && i > 1 && word(s[i - 2])) glued = true;
    }
    size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
      ++j;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    }
    if (j < s.size() && word(s[j])) glued = true;
    if (glued) {
      while (j < s.size() && (word(s[j]) || s[j] == '.' || s[j] == '-')) ++j;
    } else {
      out.emplace_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

GroundingReport LexicalGrounding(std::string_view text, const std::vector<double>& pool) {
  GroundingReport g;
  g.tokens = NumericTokens(text);
  if (g.tokens.empty()) return g;
  size_t matched = 0;
  for (const auto& tok : g.tokens) {
    double v = *ParseDouble(tok);
    size_t dot = tok.find('.');
    int k = dot == std::string::npos ? 0 : static_cast<int>(tok.size() - dot - 1);
    double tol = 0.5 * std::pow(10.0, -k) * (1.0 + 1e-9);
    bool hit = std::any_of(pool.begin(), pool.end(), [&](double p) {
      return std::fabs(std::fabs(p) - std::fabs(v)) <= tol;
    });
    if (hit) {
      ++matched;
    } else {
      g.flagged.push_back(tok);
    }
  }
  g.score = static_cast<double>(matched) / static_cast<double>(g.tokens.size());
  return g;
}

std::vector<double> GroundingPool(const DelegateRun& run, const RunStore& store) {
  std::vector<double> pool;
  for (const auto& r : run.results) {
    if (!r.ok) continue;
    Table t = Table::FromCsv(ReadFile(store.ExplainerDir(r.dir) / "output.csv"));
    for (const auto& row : t.rows) {
      for (const auto& cell : row) {
        if (auto v = ParseDouble(cell)) {
          if (std::isfinite(*v)) pool.push_back(*v);
          continue;
        }
        for (const auto& tok : NumericTokens(cell)) pool.push_back(*ParseDouble(tok));
      }
    }
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

GroundingReport LexicalGroundingScore(const ExplanationTuple& tuple,
                                      const DelegateRun& run, const RunStore& store) {
  return LexicalGrounding(tuple.text, GroundingPool(run, store));
}

}  // namespace qx
