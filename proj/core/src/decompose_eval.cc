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

#include "qx/decompose_eval.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

size_t Levenshtein(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double LevenshteinSimilarity(std::string_view a, std::string_view b) {
  size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(Levenshtein(a, b)) / longest;
}

namespace {

// Multiset overlap precision/recall between token lists.
void TokenOverlap(const std::vector<std::string>& gold,
                  const std::vector<std::string>& pred, double* p, double* r) {
  if (gold.empty() && pred.empty()) {
    *p = *r = 1.0;
    return;
  }
  if (gold.empty() || pred.empty()) {
    *p = *r = 0.0;
    return;
  }
  std::multiset<std::string> g(gold.begin(), gold.end());
  size_t common = 0;
  for (const auto& t : pred) {
    auto it = g.find(t);
    if (it != g.end()) {
      ++common;
      g.erase(it);
    }
  }
  *p = static_cast<double>(common) / pred.size();
  *r = static_cast<double>(common) / gold.size();
}

double F1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

FieldScores ScoreField(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred) {
  FieldScores s;
  if (gold.empty()) return s;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::string g = Trim(gold[i]);
    std::string q = Trim(pred[i]);
    s.exact_match += g == q ? 1.0 : 0.0;
    s.edit_match += LevenshteinSimilarity(g, q) >= kEditMatchThreshold ? 1.0 : 0.0;
    double p = 0, r = 0;
    TokenOverlap(QuestionTokens(g), QuestionTokens(q), &p, &r);
    s.token_precision += p;
    s.token_recall += r;
    s.token_f1 += F1(p, r);
  }
  double n = static_cast<double>(gold.size());
  s.exact_match /= n;
  s.edit_match /= n;
  s.token_precision /= n;
  s.token_recall /= n;
  s.token_f1 /= n;
  return s;
}

nlohmann::json ClassJson(const ClassScores& c) {
  return {{"precision", c.precision},
          {"recall", c.recall},
          {"f1", c.f1},
          {"support", c.support}};
}

}  // namespace

DecomposeReport EvaluatePredictions(const std::vector<QuestionBankEntry>& bank,
                                    const std::vector<ReframedQuestion>& predicted) {
  if (bank.size() != predicted.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction count does not match bank size");
  }
  DecomposeReport report;
  report.n = bank.size();
  std::vector<std::string> g_type, p_type, g_int, p_int, g_act, p_act, g_lik,
      p_lik;
  for (size_t i = 0; i < bank.size(); ++i) {
    const auto& g = bank[i].gold;
    const auto& p = predicted[i];
    g_type.push_back(g.explanation_type);
    p_type.push_back(p.explanation_type);
    g_int.push_back(g.machine_interpretation);
    p_int.push_back(p.machine_interpretation);
    g_act.push_back(g.action);
    p_act.push_back(p.action);
    g_lik.push_back(g.likelihood);
    p_lik.push_back(p.likelihood);
  }
  report.fields["explanation_type"] = ScoreField(g_type, p_type);
  report.fields["machine_interpretation"] = ScoreField(g_int, p_int);
  report.fields["action"] = ScoreField(g_act, p_act);
  report.fields["likelihood"] = ScoreField(g_lik, p_lik);

  ConfusionReport& cm = report.confusion;
  std::set<std::string> labels(g_type.begin(), g_type.end());
  cm.labels.assign(labels.begin(), labels.end());
  cm.predicted = cm.labels;
  for (const auto& p : p_type) {
    if (std::find(cm.predicted.begin(), cm.predicted.end(), p) ==
        cm.predicted.end()) {
      cm.predicted.push_back(p);
    }
  }
  cm.matrix.assign(cm.labels.size(), std::vector<size_t>(cm.predicted.size(), 0));
  auto col = [&](const std::string& s) {
    return static_cast<size_t>(
        std::find(cm.predicted.begin(), cm.predicted.end(), s) -
        cm.predicted.begin());
  };
  size_t correct = 0;
  for (size_t i = 0; i < g_type.size(); ++i) {
    size_t row = col(g_type[i]);  // labels are a prefix of predicted
    cm.matrix[row][col(p_type[i])]++;
    if (g_type[i] == p_type[i]) ++correct;
  }
  cm.accuracy = bank.empty() ? 0.0 : static_cast<double>(correct) / bank.size();

  size_t tp_sum = 0, pred_sum = 0, support_sum = 0;
  for (size_t k = 0; k < cm.labels.size(); ++k) {
    ClassScores c;
    size_t tp = cm.matrix[k][k];
    size_t support = 0, pred_k = 0;
    for (size_t j = 0; j < cm.predicted.size(); ++j) support += cm.matrix[k][j];
    for (size_t r = 0; r < cm.labels.size(); ++r) pred_k += cm.matrix[r][k];
    c.support = support;
    c.precision = pred_k ? static_cast<double>(tp) / pred_k : 0.0;
    c.recall = support ? static_cast<double>(tp) / support : 0.0;
    c.f1 = F1(c.precision, c.recall);
    cm.per_class[cm.labels[k]] = c;
    tp_sum += tp;
    pred_sum += pred_k;
    support_sum += support;
    cm.macro.precision += c.precision;
    cm.macro.recall += c.recall;
    cm.macro.f1 += c.f1;
    cm.weighted.precision += c.precision * support;
    cm.weighted.recall += c.recall * support;
    cm.weighted.f1 += c.f1 * support;
  }
  double k = static_cast<double>(cm.labels.size());
  if (k > 0) {
    cm.macro.precision /= k;
    cm.macro.recall /= k;
    cm.macro.f1 /= k;
  }
  if (support_sum > 0) {
    cm.weighted.precision /= support_sum;
    cm.weighted.recall /= support_sum;
    cm.weighted.f1 /= support_sum;
  }
  cm.micro.precision = pred_sum ? static_cast<double>(tp_sum) / pred_sum : 0.0;
  cm.micro.recall = support_sum ? static_cast<double>(tp_sum) / support_sum : 0.0;
  cm.micro.f1 = F1(cm.micro.precision, cm.micro.recall);
  cm.micro.support = cm.macro.support = cm.weighted.support = support_sum;
  return report;
}

DecomposeReport EvaluateDecomposer(
    const std::vector<QuestionBankEntry>& bank,
    const std::function<ReframedQuestion(const std::string&)>& decomposer) {
  std::vector<ReframedQuestion> predicted;
  predicted.reserve(bank.size());
  for (const auto& e : bank) predicted.push_back(decomposer(e.uq));
  return EvaluatePredictions(bank, predicted);
}

nlohmann::json DecomposeReport::ToJson() const {
  nlohmann::json fj = nlohmann::json::object();
  for (const auto& [name, s] : fields) {
    fj[name] = {{"exact_match", s.exact_match},
                {"edit_match", s.edit_match},
                {"token_precision", s.token_precision},
                {"token_recall", s.token_recall},
                {"token_f1", s.token_f1}};
  }
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, c] : confusion.per_class) per_class[label] = ClassJson(c);
  return {{"n", n},
          {"edit_match_threshold", kEditMatchThreshold},
          {"fields", fj},
          {"confusion",
           {{"labels", confusion.labels},
            {"predicted_labels", confusion.predicted},
            {"matrix", confusion.matrix},
            {"per_class", per_class},
            {"accuracy", confusion.accuracy},
            {"micro_avg", ClassJson(confusion.micro)},
            {"macro_avg", ClassJson(confusion.macro)},
            {"weighted_avg", ClassJson(confusion.weighted)}}}};
}

std::string DecomposeReport::ConfusionTable() const {
  size_t width = 12;
  for (const auto& l : confusion.labels) width = std::max(width, l.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%*s %10s %10s %10s %10s\n",
                static_cast<int>(width), "", "precision", "recall", "f1-score",
                "support");
  out += buf;
  auto row = [&](const std::string& name, const ClassScores& c) {
    std::snprintf(buf, sizeof(buf), "%*s %10.2f %10.2f %10.2f %10zu\n",
                  static_cast<int>(width), name.c_str(), c.precision, c.recall,
                  c.f1, c.support);
    out += buf;
  };
  for (const auto& l : confusion.labels) row(l, confusion.per_class.at(l));
  out += "\n";
  row("micro avg", confusion.micro);
  row("macro avg", confusion.macro);
  row("weighted avg", confusion.weighted);
  return out;
}

}  // namespace qx
