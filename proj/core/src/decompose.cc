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

#include "qx/decompose.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

nlohmann::json ToJson(const ReframedQuestion& rq) {
  return {{"question", rq.question},
          {"explanation_type", rq.explanation_type},
          {"machine_interpretation", rq.machine_interpretation},
          {"action", rq.action},
          {"likelihood", rq.likelihood},
          {"provenance", rq.provenance}};
}

ReframedQuestion ReframedQuestionFromJson(const nlohmann::json& j) {
  ReframedQuestion rq;
  rq.question = j.value("question", "");
  rq.explanation_type = j.value("explanation_type", std::string(kUnknownType));
  rq.machine_interpretation = j.value("machine_interpretation", "");
  rq.action = j.value("action", "");
  rq.likelihood = j.value("likelihood", "");
  rq.provenance = j.value("provenance", "pattern");
  return rq;
}

std::vector<std::string> QuestionTokens(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  auto digit = [&](size_t k) {
    return k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]));
  };
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    bool sign = c == '-' && digit(i + 1) &&
                (i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])));
    if (std::isdigit(c) || sign || (c == '.' && digit(i + 1))) {
      size_t j = i + 1;
      while (digit(j)) ++j;
      if (j < text.size() && text[j] == '.' && digit(j + 1)) {
        ++j;
        while (digit(j)) ++j;
      }
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (std::isalpha(c)) {
      size_t j = i + 1;
      while (j < text.size() &&
             std::isalnum(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      out.push_back(ToLower(text.substr(i, j - i)));
      i = j;
    } else if (c == '#') {
      out.emplace_back("#");
      ++i;
    } else {
      ++i;
    }
  }
  return out;
}

namespace {

bool IsNumber(const std::string& tok) {
  return !tok.empty() && (std::isdigit(static_cast<unsigned char>(tok[0])) ||
                          tok[0] == '-' || tok[0] == '.');
}

const std::set<std::string>& StopWords() {
  static const std::set<std::string> kStop = {
      "a",    "an",   "the",  "of",   "for",  "to",   "in",   "is",  "are",
      "was",  "were", "be",   "been", "with", "and",  "or",   "what", "why",
      "how",  "did",  "does", "do",   "this", "that", "it",   "on",  "at",
      "by",   "as",   "if",   "when", "which", "who", "me",   "there", "s"};
  return kStop;
}

// Position just past a match of `seq` in `toks` at or after `from`.
std::optional<size_t> FindSeq(const std::vector<std::string>& toks,
                              const std::vector<std::string>& seq,
                              size_t from) {
  if (seq.empty() || toks.size() < seq.size()) return std::nullopt;
  for (size_t i = from; i + seq.size() <= toks.size(); ++i) {
    if (std::equal(seq.begin(), seq.end(), toks.begin() + i)) {
      return i + seq.size();
    }
  }
  return std::nullopt;
}

bool ContainsSeq(const std::vector<std::string>& toks, size_t b, size_t e,
                 const std::vector<std::string>& seq) {
  std::vector<std::string> window(toks.begin() + b, toks.begin() + e);
  return FindSeq(window, seq, 0).has_value();
}

struct Comparator {
  std::vector<std::string> phrase;
  ConstraintOp op;
};

const std::vector<Comparator>& Comparators() {
  static const std::vector<Comparator> kCmp = {
      {{"no", "less", "than"}, ConstraintOp::kGe},
      {{"no", "more", "than"}, ConstraintOp::kLe},
      {{"at", "least"}, ConstraintOp::kGe},
      {{"at", "most"}, ConstraintOp::kLe},
      {{"greater", "than"}, ConstraintOp::kGt},
      {{"more", "than"}, ConstraintOp::kGt},
      {{"higher", "than"}, ConstraintOp::kGt},
      {{"less", "than"}, ConstraintOp::kLt},
      {{"lower", "than"}, ConstraintOp::kLt},
      {{"over"}, ConstraintOp::kGt},
      {{"above"}, ConstraintOp::kGt},
      {{"exceeds"}, ConstraintOp::kGt},
      {{"exceeding"}, ConstraintOp::kGt},
      {{"under"}, ConstraintOp::kLt},
      {{"below"}, ConstraintOp::kLt},
  };
  return kCmp;
}

struct ActionWord {
  const char* word;
  const char* action;
};

constexpr ActionWord kActions[] = {
    {"predict", "Predict"},      {"predicts", "Predict"},
    {"predicted", "Predict"},    {"predicting", "Predict"},
    {"prediction", "Predict"},   {"predictions", "Predict"},
    {"classify", "Predict"},     {"classified", "Predict"},
    {"compare", "Compare"},      {"compared", "Compare"},
    {"comparing", "Compare"},    {"comparison", "Compare"},
    {"summarize", "Summarize"},  {"summarise", "Summarize"},
    {"summarizing", "Summarize"}, {"summary", "Summarize"},
    {"distribution", "Summarize"}, {"filter", "Filter"},
    {"filtered", "Filter"},      {"filtering", "Filter"},
};

const std::vector<std::vector<std::string>>& LikelihoodLexicon() {
  static const std::vector<std::vector<std::string>> kLex = {
      {"more", "likely"}, {"less", "likely"}, {"high"}, {"low"}, {"likely"}};
  return kLex;
}

struct Mention {
  size_t begin;
  size_t end;
  size_t feature;
  int category;
  std::optional<double> value;
  ConstraintOp op = ConstraintOp::kEq;
  std::optional<double> range_lower;  // pending "between a and b"
  std::optional<double> range_upper;
};

}  // namespace

PatternDecomposer::PatternDecomposer(const Registry& registry,
                                     const Schema& schema)
    : registry_(registry), schema_(schema) {
  for (size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_.feature(f);
    std::vector<std::string> surfaces = {spec.name, spec.label};
    surfaces.insert(surfaces.end(), spec.aliases.begin(), spec.aliases.end());
    for (const auto& s : surfaces) {
      auto toks = QuestionTokens(s);
      if (!toks.empty()) forms_.push_back({toks, f, -1});
    }
    for (size_t c = 0; c < spec.categories.size(); ++c) {
      std::vector<std::string> cats = {spec.categories[c].value};
      cats.insert(cats.end(), spec.categories[c].aliases.begin(),
                  spec.categories[c].aliases.end());
      for (const auto& s : cats) {
        auto toks = QuestionTokens(s);
        if (!toks.empty()) forms_.push_back({toks, f, static_cast<int>(c)});
      }
    }
  }
  std::stable_sort(forms_.begin(), forms_.end(), [](const Form& a, const Form& b) {
    return a.tokens.size() > b.tokens.size();
  });

  const auto& t = schema_.target();
  std::vector<std::string> target_surfaces = {t.label, t.column,
                                              t.positive_label, t.negative_label};
  target_surfaces.insert(target_surfaces.end(), t.aliases.begin(),
                         t.aliases.end());
  for (const auto& s : target_surfaces) {
    auto toks = QuestionTokens(s);
    if (!toks.empty()) target_forms_.push_back(toks);
  }
  std::stable_sort(target_forms_.begin(), target_forms_.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });

  for (const auto& type : registry_.types()) {
    CompiledType ct;
    ct.id = type.id;
    for (const auto& cue : type.cues) {
      CompiledCue cc;
      cc.weight = cue.weight;
      std::string phrase = cue.phrase;
      size_t pos = 0;
      while (true) {
        size_t dots = phrase.find("...", pos);
        auto part = QuestionTokens(phrase.substr(
            pos, dots == std::string::npos ? std::string::npos : dots - pos));
        if (!part.empty()) cc.parts.push_back(part);
        if (dots == std::string::npos) break;
        pos = dots + 3;
      }
      if (!cc.parts.empty()) ct.cues.push_back(std::move(cc));
    }
    for (const auto& q : type.questions) {
      // Drop placeholders before tokenizing.
      std::string text;
      bool in_slot = false;
      for (char c : q.text) {
        if (c == '{') in_slot = true;
        if (!in_slot) text.push_back(c);
        if (c == '}') {
          in_slot = false;
          text.push_back(' ');
        }
      }
      std::set<std::string> words;
      for (auto& tok : QuestionTokens(text)) {
        if (!IsNumber(tok) && !StopWords().count(tok)) words.insert(tok);
      }
      ct.pattern_words.emplace_back(words.begin(), words.end());
    }
    types_.push_back(std::move(ct));
  }
}

std::vector<std::pair<std::string, double>> PatternDecomposer::Scores(
    std::string_view question) const {
  auto toks = QuestionTokens(NormalizeText(question));
  std::set<std::string> qwords(toks.begin(), toks.end());
  std::vector<std::pair<std::string, double>> out;
  for (const auto& ct : types_) {
    double score = 0.0;
    for (const auto& cue : ct.cues) {
      size_t from = 0;
      bool ok = true;
      for (const auto& part : cue.parts) {
        auto end = FindSeq(toks, part, from);
        if (!end) {
          ok = false;
          break;
        }
        from = *end;
      }
      if (ok) score += cue.weight;
    }
    double best = 0.0;
    for (const auto& words : ct.pattern_words) {
      if (words.empty()) continue;
      size_t hit = 0;
      for (const auto& w : words) hit += qwords.count(w);
      best = std::max(best, static_cast<double>(hit) / words.size());
    }
    out.emplace_back(ct.id, score + best);
  }
  return out;
}

std::string PatternDecomposer::ExtractAction(std::string_view question) const {
  for (const auto& tok : QuestionTokens(NormalizeText(question))) {
    for (const auto& a : kActions) {
      if (tok == a.word) return a.action;
    }
  }
  return "Explain";
}

std::string PatternDecomposer::ExtractLikelihood(
    std::string_view question) const {
  auto toks = QuestionTokens(NormalizeText(question));
  for (const auto& cue : LikelihoodLexicon()) {
    if (FindSeq(toks, cue, 0)) {
      std::string out;
      for (const auto& w : cue) out += (out.empty() ? "" : " ") + w;
      return out;
    }
  }
  return "";
}

ParsedInterpretation PatternDecomposer::ExtractInterpretation(
    std::string_view question) const {
  auto toks = QuestionTokens(NormalizeText(question));
  std::vector<bool> used(toks.size(), false);
  std::vector<Mention> mentions;
  bool target = false;

  for (size_t i = 0; i < toks.size();) {
    const Form* best = nullptr;
    std::optional<double> captured;
    for (const auto& form : forms_) {
      if (i + form.tokens.size() > toks.size()) continue;
      bool ok = true;
      std::optional<double> cap;
      for (size_t k = 0; k < form.tokens.size(); ++k) {
        const auto& want = form.tokens[k];
        const auto& have = toks[i + k];
        if (want == "#") {
          if (!IsNumber(have)) {
            ok = false;
            break;
          }
          cap = ParseDouble(have);
        } else if (want != have) {
          ok = false;
          break;
        }
      }
      if (ok) {
        best = &form;
        captured = cap;
        break;  // forms_ is longest-first
      }
    }
    size_t target_len = 0;
    for (const auto& tf : target_forms_) {
      if (i + tf.size() <= toks.size() &&
          std::equal(tf.begin(), tf.end(), toks.begin() + i)) {
        target_len = tf.size();
        break;
      }
    }
    if (best && best->tokens.size() >= target_len) {
      Mention m;
      m.begin = i;
      m.end = i + best->tokens.size();
      m.feature = best->feature;
      m.category = best->category;
      m.value = captured;
      for (size_t k = m.begin; k < m.end; ++k) used[k] = true;
      mentions.push_back(m);
      i = m.end;
    } else if (target_len > 0) {
      target = true;
      for (size_t k = i; k < i + target_len; ++k) used[k] = true;
      i += target_len;
    } else {
      ++i;
    }
  }

  // Attach free numbers to the nearest preceding numeric mention.
  for (size_t i = 0; i < toks.size(); ++i) {
    if (used[i] || !IsNumber(toks[i])) continue;
    auto value = ParseDouble(toks[i]);
    if (!value || !std::isfinite(*value)) continue;
    Mention* owner = nullptr;
    for (auto& m : mentions) {
      if (m.end <= i && m.category < 0 &&
          schema_.feature(m.feature).is_numeric()) {
        owner = &m;
      }
    }
    if (!owner) continue;
    used[i] = true;
    if (owner->range_lower && !owner->range_upper) {
      owner->range_upper = *value;
      continue;
    }
    if (owner->value || owner->range_lower) continue;  // already bound: drop
    if (ContainsSeq(toks, owner->end, i, {"between"})) {
      owner->range_lower = *value;
      continue;
    }
    owner->op = ConstraintOp::kEq;
    for (const auto& cmp : Comparators()) {
      if (ContainsSeq(toks, owner->end, i, cmp.phrase)) {
        owner->op = cmp.op;
        break;
      }
    }
    owner->value = *value;
  }

  ParsedInterpretation p;
  p.action = ExtractAction(question);
  if (target) p.target = schema_.target().label;
  FeatureGroup group;
  for (const auto& m : mentions) {
    const auto& spec = schema_.feature(m.feature);
    if (m.category >= 0) {
      group.Add(FeatureConstraint::Categorical(
          spec.name, spec.categories[static_cast<size_t>(m.category)].value));
    } else if (m.range_lower && m.range_upper) {
      double lo = std::min(*m.range_lower, *m.range_upper);
      double hi = std::max(*m.range_lower, *m.range_upper);
      if (lo < hi) group.Add(FeatureConstraint::Range(spec.name, lo, hi));
    } else if (m.range_lower) {
      group.Add(FeatureConstraint::Numeric(spec.name, ConstraintOp::kGe,
                                           *m.range_lower));
    } else if (m.value) {
      group.Add(FeatureConstraint::Numeric(spec.name, m.op, *m.value));
    } else if (std::find(p.focus_features.begin(), p.focus_features.end(),
                         spec.name) == p.focus_features.end()) {
      p.focus_features.push_back(spec.name);
    }
  }
  // A feature that ended up constrained is not also a focus feature.
  std::erase_if(p.focus_features, [&](const std::string& f) {
    return group.Find(f) != nullptr;
  });
  if (!group.empty()) p.groups.push_back(std::move(group));
  return p;
}

ReframedQuestion PatternDecomposer::Decompose(std::string_view question) const {
  ReframedQuestion rq;
  rq.question = std::string(question);
  rq.provenance = "pattern";
  auto scores = Scores(question);
  double best = 0.0;
  std::string best_id;
  for (const auto& [id, score] : scores) {
    if (score > best) {
      best = score;
      best_id = id;
    }
  }
  if (best_id.empty()) return rq;  // Unknown, empty interpretation
  rq.explanation_type = best_id;
  ParsedInterpretation p = ExtractInterpretation(question);
  rq.action = p.action;
  rq.machine_interpretation = SerializeInterpretation(p);
  rq.likelihood = ExtractLikelihood(question);
  return rq;
}

}  // namespace qx
