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

#include "qx/question_bank.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "qx/common.h"
#include "qx/error.h"
#include "qx/interp.h"

namespace qx {

TypeCounts DefaultBankCounts() {
  return {{"data", 80},        {"case_based", 60},    {"rationale", 50},
          {"contextual", 35},  {"contrastive", 29},   {"counterfactual", 25}};
}

namespace {

// Portable draws; std distributions differ between standard libraries.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

size_t Pick(std::mt19937_64& rng, size_t n) { return rng() % n; }

double RoundTo(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

bool Uses(const std::string& text, std::string_view slot) {
  return text.find(std::string("{") + std::string(slot) + "}") !=
         std::string::npos;
}

std::string Replace(std::string s, std::string_view key, std::string_view with) {
  size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), with);
    pos += with.size();
  }
  return s;
}

size_t FeaturesNeeded(const QuestionPattern& q) {
  std::string all = q.text + " " + q.interpretation;
  if (Uses(all, "F2") || Uses(all, "V2")) return 2;
  if (Uses(all, "F1") || Uses(all, "V1") || Uses(all, "LO1")) return 1;
  return 0;
}

std::string Clean(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::vector<QuestionBankEntry> GenerateQuestionBank(const Schema& schema,
                                                    const Registry& registry,
                                                    const TypeCounts& counts,
                                                    uint64_t seed) {
  std::vector<size_t> numeric;
  for (size_t i : schema.model_features()) {
    const auto& f = schema.feature(i);
    if (f.min && f.max && *f.min < *f.max) numeric.push_back(i);
  }
  if (numeric.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "question generation needs a numeric feature with a range");
  }
  std::mt19937_64 rng(seed);
  std::vector<QuestionBankEntry> bank;
  for (const auto& [type_id, n] : counts) {
    const ExplanationType& type = registry.Type(type_id);
    std::vector<const QuestionPattern*> usable;
    for (const auto& q : type.questions) {
      if (q.has_gold && FeaturesNeeded(q) <= numeric.size()) usable.push_back(&q);
    }
    if (n == 0) continue;
    if (usable.empty()) {
      throw Error(ErrorCode::kUnsupportedType,
                  "type '" + type_id + "' has no instantiable question patterns",
                  {{"type", type_id}});
    }
    for (size_t k = 0; k < n; ++k) {
      const QuestionPattern& q = *usable[k % usable.size()];
      size_t f1 = numeric[Pick(rng, numeric.size())];
      size_t f2 = f1;
      if (numeric.size() > 1) {
        while (f2 == f1) f2 = numeric[Pick(rng, numeric.size())];
      }
      auto draw = [&](size_t f) {
        const auto& spec = schema.feature(f);
        double v = *spec.min + Uniform01(rng) * (*spec.max - *spec.min);
        return RoundTo(v, spec.decimals);
      };
      double v1 = draw(f1);
      double v2 = draw(f2);
      double lo = draw(f1);
      double hi = draw(f1);
      for (int tries = 0; lo == hi && tries < 64; ++tries) hi = draw(f1);
      if (lo > hi) std::swap(lo, hi);

      const auto& s1 = schema.feature(f1);
      const auto& s2 = schema.feature(f2);
      const auto& target = schema.target();
      auto fill = [&](std::string text, bool display) {
        text = Replace(text, "{T}", target.label);
        text = Replace(text, "{NT}", target.negative_label);
        text = Replace(text, "{F1}", display ? s1.label : s1.name);
        text = Replace(text, "{F2}", display ? s2.label : s2.name);
        text = Replace(text, "{V1}", FormatExact(v1));
        text = Replace(text, "{V2}", FormatExact(v2));
        text = Replace(text, "{LO1}", FormatExact(lo));
        text = Replace(text, "{HI1}", FormatExact(hi));
        return text;
      };
      QuestionBankEntry e;
      e.uq = fill(q.text, /*display=*/true);
      e.gold.question = e.uq;
      e.gold.explanation_type = type.id;
      e.gold.action = q.action;
      e.gold.likelihood = q.likelihood;
      e.gold.provenance = "gold";
      e.gold.machine_interpretation = SerializeInterpretation(
          ParseInterpretation(fill(q.interpretation, /*display=*/false), schema));
      bank.push_back(std::move(e));
    }
  }
  return bank;
}

std::vector<QuestionBankEntry> GenerateQuestionBank(const Schema& schema,
                                                    const Registry& registry,
                                                    size_t n_per_type,
                                                    uint64_t seed) {
  TypeCounts counts;
  for (const auto& t : registry.types()) counts.emplace_back(t.id, n_per_type);
  return GenerateQuestionBank(schema, registry, counts, seed);
}

std::string BankToTsv(const std::vector<QuestionBankEntry>& bank) {
  std::string out = "uq\ttype\taction\tinterpretation\tlikelihood\tsource\n";
  for (const auto& e : bank) {
    out += Clean(e.uq) + "\t" + Clean(e.gold.explanation_type) + "\t" +
           Clean(e.gold.action) + "\t" + Clean(e.gold.machine_interpretation) +
           "\t" + Clean(e.gold.likelihood) + "\t" + Clean(e.source) + "\n";
  }
  return out;
}

std::vector<QuestionBankEntry> BankFromTsv(std::string_view text) {
  std::vector<QuestionBankEntry> bank;
  size_t line_no = 0;
  for (auto& raw : Split(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    auto cols = Split(raw, '\t');
    if (line_no == 1 && !cols.empty() && cols[0] == "uq") continue;
    if (cols.size() != 6) {
      throw Error(ErrorCode::kParseError,
                  "question bank line " + std::to_string(line_no) +
                      ": expected 6 tab-separated columns, got " +
                      std::to_string(cols.size()),
                  {{"line", line_no}});
    }
    QuestionBankEntry e;
    e.uq = cols[0];
    e.gold.question = cols[0];
    e.gold.explanation_type = cols[1];
    e.gold.action = cols[2];
    e.gold.machine_interpretation = cols[3];
    e.gold.likelihood = cols[4];
    e.gold.provenance = "gold";
    e.source = cols[5];
    bank.push_back(std::move(e));
  }
  return bank;
}

BankSplit StratifiedSplit(const std::vector<QuestionBankEntry>& bank,
                          double test_fraction, uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "test_fraction must be in [0, 1]");
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<size_t>> by_type;
  for (size_t i = 0; i < bank.size(); ++i) {
    const auto& t = bank[i].gold.explanation_type;
    if (!by_type.count(t)) order.push_back(t);
    by_type[t].push_back(i);
  }
  std::mt19937_64 rng(seed);
  BankSplit split;
  for (const auto& t : order) {
    auto idx = by_type[t];
    for (size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[Pick(rng, i)]);
    }
    size_t n_test = static_cast<size_t>(std::lround(test_fraction * idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) {
      (k < n_test ? split.test : split.train).push_back(bank[idx[k]]);
    }
  }
  return split;
}

}  // namespace qx
