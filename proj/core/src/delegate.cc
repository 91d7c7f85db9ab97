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

#include "qx/delegate.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "qx/common.h"
#include "qx/error.h"
#include "qx/protodash.h"
#include "qx/rules.h"
#include "qx/summary.h"

namespace qx {

nlohmann::json DelegateConfig::ToJson() const {
  return {{"max_instances", max_instances},
          {"shapley", shapley.ToJson()},
          {"prototypes", prototypes},
          {"counterfactual", counterfactual.ToJson()},
          {"surrogate_depth", surrogate_depth},
          {"surrogate_min_leaf", surrogate_min_leaf}};
}

DelegateConfig DelegateConfig::FromJson(const nlohmann::json& j) {
  DelegateConfig c;
  c.max_instances = j.value("max_instances", c.max_instances);
  if (j.contains("shapley")) {
    const auto& s = j.at("shapley");
    c.shapley.mode = s.value("mode", "exact") == "sampled" ? ShapleyMode::kSampled
                                                            : ShapleyMode::kExact;
    c.shapley.average_background = s.value("value_function", "median") == "background_mean";
    c.shapley.permutations = s.value("permutations", c.shapley.permutations);
    c.shapley.seed = s.value("seed", c.shapley.seed);
  }
  c.prototypes = j.value("prototypes", c.prototypes);
  if (j.contains("counterfactual")) {
    const auto& s = j.at("counterfactual");
    auto& cf = c.counterfactual;
    cf.k = s.value("k", cf.k);
    cf.restarts = s.value("restarts", cf.restarts);
    cf.evaluations = s.value("evaluations", cf.evaluations);
    cf.lambda_proximity = s.value("lambda_proximity", cf.lambda_proximity);
    cf.lambda_diversity = s.value("lambda_diversity", cf.lambda_diversity);
    cf.seed = s.value("seed", cf.seed);
  }
  c.surrogate_depth = j.value("surrogate_depth", c.surrogate_depth);
  c.surrogate_min_leaf = j.value("surrogate_min_leaf", c.surrogate_min_leaf);
  return c;
}

std::vector<std::string> OutputColumns(Modality m,
                                       const std::vector<std::string>& features) {
  std::vector<std::string> cols;
  switch (m) {
    case Modality::kFeatures:
      return {"group", "instance", "feature", "value", "phi",
              "baseline", "prediction", "predicted_label"};
    case Modality::kInstances:
      cols = {"group", "rank", "row", "weight", "label"};
      cols.insert(cols.end(), features.begin(), features.end());
      return cols;
    case Modality::kCounterfactuals:
      cols = {"group", "kind", "rank", "row", "label", "probability", "proximity"};
      cols.insert(cols.end(), features.begin(), features.end());
      for (const auto& f : features) cols.push_back("delta_" + f);
      return cols;
    case Modality::kRules:
      return {"group", "rule_id", "rule", "label", "coverage",
              "focus_coverage", "confidence", "length", "source"};
    case Modality::kDataSummary:
      return {"group", "feature", "count", "positives", "mean", "sd", "min", "max"};
  }
  return cols;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string Num(double v) { return FormatExact(v); }
std::string Num(size_t v) { return std::to_string(v); }

double CellNumber(const Table& t, size_t row, std::string_view col) {
  auto v = ParseDouble(t.rows.at(row).at(t.Column(col)));
  if (!v) {
    throw Error(ErrorCode::kParseError,
                "output cell " + std::string(col) + " is not a number");
  }
  return *v;
}

// z-scores with the full data's mean and SD, so kernels see comparable units.
struct Standardizer {
  Row mean, sd;
  explicit Standardizer(const Dataset& data) {
    const size_t d = data.dims();
    mean.assign(d, 0.0);
    sd.assign(d, 0.0);
    for (const auto& r : data.x()) {
      for (size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(data.rows());
    for (const auto& r : data.x()) {
      for (size_t j = 0; j < d; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    }
    for (double& s : sd) {
      s = std::sqrt(s / static_cast<double>(data.rows()));
      if (!(s > 0)) s = 1.0;
    }
  }
  Row Apply(const Row& r) const {
    Row out(r.size());
    for (size_t j = 0; j < r.size(); ++j) out[j] = (r[j] - mean[j]) / sd[j];
    return out;
  }
  Matrix Apply(const Matrix& m) const {
    Matrix out;
    out.reserve(m.size());
    for (const auto& r : m) out.push_back(Apply(r));
    return out;
  }
};

// Shared state for one delegate call: derived data computed once.
struct Workspace {
  const Dataset& data;
  const TrainedModel& model;
  const DelegateConfig& config;
  ModelFn f;
  Standardizer z;
  Matrix z_all;
  Row medians;
  std::optional<double> data_bandwidth;

  Workspace(const Dataset& d, const TrainedModel& m, const DelegateConfig& c)
      : data(d), model(m), config(c),
        f([&m](std::span<const double> x) { return m.Proba(x); }), z(d),
        z_all(z.Apply(d.x())), medians(d.Medians()) {}

  double DataBandwidth() {
    if (!data_bandwidth) data_bandwidth = MedianPairwiseDistance(z_all);
    return *data_bandwidth;
  }
};

MetricReport Report(std::string metric, Modality m, const std::string& explainer,
                    size_t instances, nlohmann::json config) {
  MetricReport r;
  r.metric = std::move(metric);
  r.modality = m;
  r.explainer = explainer;
  r.instances = instances;
  r.config = std::move(config);
  return r;
}

// Runs `fn` and stores its value, or the reason it is undefined.
template <typename Fn>
void Fill(MetricReport& r, Fn&& fn) {
  try {
    r.value = fn();
  } catch (const Error& e) {
    r.value.reset();
    r.note = std::string(ErrorCodeName(e.code())) + ": " + e.what();
  }
}

Matrix FeatureRows(const Table& t, const std::vector<std::string>& features,
                   std::string_view kind_filter = "") {
  Matrix out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (!kind_filter.empty() && t.rows[i][t.Column("kind")] != kind_filter) continue;
    Row r;
    for (const auto& f : features) r.push_back(CellNumber(t, i, f));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics, always computed from the output table so that a recomputation
// from disk takes the same path.

std::vector<MetricReport> ComputeMetrics(Modality modality, const std::string& explainer,
                                         const Table& t, const std::vector<size_t>& focus,
                                         Workspace& ws) {
  const auto features = ws.data.feature_names();
  std::vector<MetricReport> out;
  switch (modality) {
    case Modality::kFeatures: {
      // Group rows per explained instance.
      std::map<size_t, Row> phi;
      std::vector<size_t> order;
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const std::string& inst = t.rows[i][t.Column("instance")];
        if (inst == "mean") continue;
        size_t idx = static_cast<size_t>(CellNumber(t, i, "instance"));
        if (!phi.count(idx)) order.push_back(idx);
        phi[idx].push_back(CellNumber(t, i, "phi"));
      }
      nlohmann::json cfg = {{"scheme", "single-feature median replacement"},
                            {"reference", "dataset medians"}};
      auto faith = Report("faithfulness", modality, explainer, order.size(), cfg);
      auto mono = Report("monotonicity", modality, explainer, order.size(),
                         {{"scheme", "single-feature median replacement"},
                          {"loss", "log-loss against the predicted label"}});
      std::vector<double> fv, mv;
      std::vector<std::string> notes;
      for (size_t idx : order) {
        const Row& x = ws.data.row(idx);
        try {
          fv.push_back(Faithfulness(ws.f, x, phi[idx], ws.medians));
        } catch (const Error& e) {
          notes.push_back("faithfulness row " + std::to_string(idx) + ": " + e.what());
        }
        try {
          int label = ws.model.Predict(x).first;
          auto e = ExpectedLossDeltas(ws.f, x, label, ws.medians);
          mv.push_back(Monotonicity(phi[idx], e));
        } catch (const Error& e) {
          notes.push_back("monotonicity row " + std::to_string(idx) + ": " + e.what());
        }
      }
      auto mean = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      faith.value = mean(fv);
      mono.value = mean(mv);
      if (!faith.value) faith.note = "DegenerateVariance: undefined for every instance";
      if (!mono.value) mono.note = "DegenerateVariance: undefined for every instance";
      faith.config["defined_instances"] = fv.size();
      mono.config["defined_instances"] = mv.size();
      out.push_back(std::move(faith));
      out.push_back(std::move(mono));
      break;
    }
    case Modality::kInstances:
    case Modality::kCounterfactuals:
    case Modality::kDataSummary: {
      Matrix chosen;
      Matrix reference;
      double bandwidth = 0.0;
      std::string reference_name;
      std::optional<Error> bw_error;
      Matrix focus_rows;
      for (size_t i : focus) focus_rows.push_back(ws.data.row(i));
      if (modality == Modality::kInstances) {
        chosen = FeatureRows(t, features);
        reference = focus_rows;
        reference_name = "focus records";
      } else if (modality == Modality::kCounterfactuals) {
        chosen = FeatureRows(t, features, "counterfactual");
        reference = ws.data.x();
        reference_name = "dataset";
      } else {
        chosen = focus_rows;
        reference = ws.data.x();
        reference_name = "dataset";
      }
      // The selection kernel: median heuristic over the z-scored data.
      try {
        bandwidth = ws.DataBandwidth();
      } catch (const Error& e) {
        bw_error = e;
      }
      auto div = Report("diversity", modality, explainer, chosen.size(),
                        {{"distance", "euclidean"}, {"units", "original"}});
      Fill(div, [&] { return Diversity(chosen); });
      auto nonrep = Report("non_representativeness", modality, explainer, chosen.size(),
                           {{"kernel", "rbf"},
                            {"space", "z-scored"},
                            {"bandwidth", bandwidth},
                            {"reference", reference_name}});
      Fill(nonrep, [&] {
        if (bw_error) throw *bw_error;
        if (chosen.empty()) {
          throw Error(ErrorCode::kTooFewInstances, "no instances to compare");
        }
        return NonRepresentativeness(ws.z.Apply(chosen), ws.z.Apply(reference),
                                     bandwidth);
      });
      out.push_back(std::move(div));
      out.push_back(std::move(nonrep));
      break;
    }
    case Modality::kRules: {
      std::vector<Rule> rules;
      for (size_t i = 0; i < t.rows.size(); ++i) {
        Rule r = ParseRule(t.rows[i][t.Column("rule")], ws.data.schema());
        r.coverage = static_cast<size_t>(CellNumber(t, i, "coverage"));
        rules.push_back(std::move(r));
      }
      RuleSet rs;
      rs.rules = rules;
      rs.features = features;
      auto fid = Report("fidelity", modality, explainer, ws.data.rows(),
                        {{"records", "dataset"},
                         {"conflicts", "first covering rule by coverage"}});
      Fill(fid, [&] { return Fidelity(rs, ws.data.x(), ws.model.PredictBatch(ws.data.x())); });
      auto len = Report("average_rule_length", modality, explainer, rules.size(),
                        {{"counts", "distinct features per rule"}});
      Fill(len, [&] { return AverageRuleLength(rules); });
      out.push_back(std::move(fid));
      out.push_back(std::move(len));
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Explainers. Each fills `t` (header preset) and returns its config.

std::string LabelCell(int label) { return std::to_string(label); }

nlohmann::json RunShap(Workspace& ws, const std::string& group,
                       const std::vector<size_t>& focus, Table& t) {
  const auto features = ws.data.feature_names();
  const size_t n = std::min(ws.config.max_instances, focus.size());
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no focus records to explain");
  Row mean_phi(features.size(), 0.0);
  double mean_base = 0.0, mean_pred = 0.0;
  size_t positive = 0;
  for (size_t k = 0; k < n; ++k) {
    size_t idx = focus[k];
    const Row& x = ws.data.row(idx);
    auto a = ShapleyAttribution(ws.f, x, ws.data.x(), ws.config.shapley);
    int label = a.prediction >= 0.5 ? 1 : 0;
    positive += label;
    for (size_t j = 0; j < features.size(); ++j) {
      t.AddRow({group, Num(idx), features[j], Num(x[j]), Num(a.phi[j]), Num(a.baseline),
                Num(a.prediction), LabelCell(label)});
      mean_phi[j] += a.phi[j] / static_cast<double>(n);
    }
    mean_base += a.baseline / static_cast<double>(n);
    mean_pred += a.prediction / static_cast<double>(n);
  }
  int majority = 2 * positive >= n ? 1 : 0;
  for (size_t j = 0; j < features.size(); ++j) {
    t.AddRow({group, "mean", features[j], "", Num(mean_phi[j]), Num(mean_base),
              Num(mean_pred), LabelCell(majority)});
  }
  nlohmann::json cfg = ws.config.shapley.ToJson();
  cfg["instances"] = n;
  return cfg;
}

nlohmann::json RunProtodash(Workspace& ws, const std::string& group,
                            const std::vector<size_t>& focus, Table& t) {
  Matrix target;
  for (size_t i : focus) target.push_back(ws.z_all[i]);
  size_t m = std::min(ws.config.prototypes, ws.data.rows());
  auto ps = ProtodashSelect(ws.z_all, target, m);
  for (size_t r = 0; r < ps.indices.size(); ++r) {
    size_t idx = ps.indices[r];
    std::vector<std::string> row = {group, Num(r + 1), Num(idx), Num(ps.weights[r]),
                                    LabelCell(ws.data.y()[idx])};
    for (double v : ws.data.row(idx)) row.push_back(Num(v));
    t.AddRow(std::move(row));
  }
  return {{"m", m},
          {"kernel", "rbf"},
          {"bandwidth", ps.bandwidth},
          {"bandwidth_rule", "median pairwise distance"},
          {"space", "z-scored"},
          {"candidates", "dataset"},
          {"target", "focus records"},
          {"objective_trace", ps.objective_trace}};
}

nlohmann::json RunDice(Workspace& ws, const std::string& group,
                       const std::vector<size_t>& focus, Table& t) {
  if (focus.empty()) throw Error(ErrorCode::kEmptyDataset, "no focus record");
  size_t idx = focus.front();
  auto space = FeatureSpace::FromDataset(ws.data);
  auto set = CounterfactualSearch(ws.f, ws.data.row(idx), space, ws.config.counterfactual);
  auto add = [&](const std::string& kind, const std::string& rank, const std::string& row,
                 int label, double p, double prox, const Row& values, const Row& deltas) {
    std::vector<std::string> cells = {group, kind, rank, row, LabelCell(label), Num(p),
                                      Num(prox)};
    for (double v : values) cells.push_back(Num(v));
    for (double d : deltas) cells.push_back(Num(d));
    t.AddRow(std::move(cells));
  };
  add("original", "0", Num(idx), set.original_label, set.original_probability, 0.0,
      set.original, Row(set.original.size(), 0.0));
  for (size_t r = 0; r < set.items.size(); ++r) {
    const auto& c = set.items[r];
    add("counterfactual", Num(r + 1), "", c.label, c.probability, c.proximity, c.values,
        c.deltas);
  }
  nlohmann::json cfg = ws.config.counterfactual.ToJson();
  cfg["instance"] = idx;
  cfg["immutable"] = set.immutable;
  return cfg;
}

nlohmann::json RunRules(Workspace& ws, const std::string& group,
                        const std::vector<size_t>& focus, Table& t) {
  RuleSet rs;
  std::string source;
  nlohmann::json cfg;
  if (ws.model.kind == ModelKind::kLogisticRegression) {
    // Rules describe a tree fitted to the model's own predictions.
    std::vector<int> labels = ws.model.PredictBatch(ws.data.x());
    std::vector<size_t> all(ws.data.rows());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    TreeParams p{ws.config.surrogate_depth, ws.config.surrogate_min_leaf, 0};
    auto tree = DecisionTree::Fit(ws.data.x(), labels, all, p, nullptr);
    rs = ExtractTreeRules(tree, ws.data.feature_names(), ws.data.x(), true);
    source = "surrogate";
    cfg = {{"source", source},
           {"surrogate_depth", p.max_depth},
           {"surrogate_min_leaf", p.min_leaf}};
  } else {
    rs = ExtractRules(ws.model, ws.data.x(), true);
    source = ws.model.kind == ModelKind::kDecisionTree ? "tree" : "forest";
    cfg = {{"source", source}};
  }
  cfg["simplify"] = true;
  for (size_t r = 0; r < rs.rules.size(); ++r) {
    const auto& rule = rs.rules[r];
    size_t focus_cov = 0;
    for (size_t i : focus) focus_cov += rule.Covers(ws.data.row(i));
    t.AddRow({group, Num(r + 1), RuleToString(rule), LabelCell(rule.label),
              Num(rule.coverage), Num(focus_cov), Num(rule.confidence),
              Num(rule.length()), source});
  }
  return cfg;
}

nlohmann::json RunDataSummary(Workspace& ws, const std::string& group,
                              const std::vector<size_t>& focus, Table& t) {
  auto s = Summarize(ws.data, focus, group);
  auto opt = [](const std::optional<double>& v) { return v ? Num(*v) : std::string(); };
  for (const auto& f : s.features) {
    t.AddRow({group, f.feature, Num(f.count), Num(s.positives), opt(f.mean), opt(f.sd),
              opt(f.min), opt(f.max)});
  }
  return {{"sd", "sample (n - 1)"}};
}

using ExplainerFn = nlohmann::json (*)(Workspace&, const std::string&,
                                       const std::vector<size_t>&, Table&);

ExplainerFn FindExplainer(std::string_view id) {
  if (id == "shap") return RunShap;
  if (id == "protodash") return RunProtodash;
  if (id == "dice") return RunDice;
  if (id == "rulexai") return RunRules;
  if (id == "data_summary") return RunDataSummary;
  return nullptr;
}

std::string GroupText(const FeatureGroup& g) {
  return g.empty() ? std::string("all records") : SerializeGroup(g);
}

}  // namespace

nlohmann::json ExplainerResult::ToJson() const {
  nlohmann::json metrics_json = nlohmann::json::array();
  for (const auto& m : metrics) metrics_json.push_back(m.ToJson());
  return {{"explainer", explainer},
          {"modality", std::string(ModalityName(modality))},
          {"group_index", group_index},
          {"group", qx::ToJson(group)},
          {"ok", ok},
          {"error", error},
          {"dir", dir},
          {"focus", focus},
          {"approximate", approximate},
          {"metrics", metrics_json}};
}

size_t DelegateRun::successes() const {
  return static_cast<size_t>(std::count_if(results.begin(), results.end(),
                                           [](const auto& r) { return r.ok; }));
}

nlohmann::json DelegateRun::ToJson() const {
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : results) res.push_back(r.ToJson());
  nlohmann::json groups_json = nlohmann::json::array();
  for (const auto& g : groups) groups_json.push_back(qx::ToJson(g));
  return {{"run_id", run_id},
          {"rq", qx::ToJson(rq)},
          {"explanation_type", explanation_type},
          {"interpretation", qx::ToJson(parsed)},
          {"groups", groups_json},
          {"results", res},
          {"warnings", warnings},
          {"status", status},
          {"dataset", dataset},
          {"model", model},
          {"config", config.ToJson()},
          {"started", started},
          {"finished", finished}};
}

DelegateRun DelegateRun::FromJson(const nlohmann::json& j, const RunStore& store) {
  try {
    DelegateRun run;
    run.run_id = j.at("run_id");
    run.rq = ReframedQuestionFromJson(j.at("rq"));
    run.explanation_type = j.at("explanation_type");
    for (const auto& g : j.at("groups")) run.groups.push_back(GroupFromJson(g));
    run.warnings = j.value("warnings", std::vector<std::string>{});
    run.status = j.value("status", "ok");
    run.dataset = j.value("dataset", nlohmann::json::object());
    run.model = j.value("model", nlohmann::json::object());
    run.config = DelegateConfig::FromJson(j.value("config", nlohmann::json::object()));
    run.started = j.value("started", "");
    run.finished = j.value("finished", "");
    const auto& interp = j.at("interpretation");
    if (!interp.is_null()) {
      run.parsed.action = interp.value("action", "Explain");
      if (interp.contains("target") && !interp["target"].is_null()) {
        run.parsed.target = interp["target"].get<std::string>();
      }
      run.parsed.focus_features =
          interp.value("focus_features", std::vector<std::string>{});
      run.parsed.residue = interp.value("residue", std::vector<std::string>{});
      run.parsed.groups = run.groups;
    }
    for (const auto& r : j.at("results")) {
      ExplainerResult e;
      e.explainer = r.at("explainer");
      auto m = ModalityFromName(r.at("modality").get<std::string>());
      if (!m) throw Error(ErrorCode::kParseError, "unknown modality in run record");
      e.modality = *m;
      e.group_index = r.at("group_index");
      e.group = GroupFromJson(r.at("group"));
      e.ok = r.at("ok");
      e.error = r.value("error", nlohmann::json());
      e.dir = r.at("dir");
      e.focus = r.at("focus").get<std::vector<size_t>>();
      e.approximate = r.value("approximate", false);
      for (const auto& mj : r.at("metrics")) e.metrics.push_back(MetricReport::FromJson(mj));
      if (e.ok) {
        e.output = Table::FromCsv(ReadFile(store.ExplainerDir(e.dir) / "output.csv"));
      }
      run.results.push_back(std::move(e));
    }
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed run record: ") + e.what());
  }
}

DelegateRun LoadRun(const RunStore& store, std::string_view run_id) {
  return DelegateRun::FromJson(store.ReadRecord(run_id), store);
}

DelegateRun Delegate(const ReframedQuestion& rq, const DelegateContext& ctx,
                     const DelegateConfig& config) {
  const auto& type = ctx.registry.Type(rq.explanation_type);
  auto explainers = ctx.registry.ExplainersForType(type.id);

  DelegateRun run;
  run.rq = rq;
  run.explanation_type = type.id;
  run.dataset = ctx.dataset_ref;
  run.model = ctx.model_ref;
  run.config = config;
  run.started = UtcTimestampIso();

  if (explainers.empty()) {
    run.run_id = ctx.store.CreateRunId(type.id);
    run.status = "unsupported";
    std::string msg = "no explainer is registered for explanation type '" + type.id +
                      "' (0 registrations)";
    run.warnings.push_back(msg);
    run.finished = UtcTimestampIso();
    ctx.store.WriteRecord(run.run_id, run.ToJson());
    throw Error(ErrorCode::kUnsupportedExplanationType, msg,
                {{"type", type.id}, {"registrations", 0}, {"run_id", run.run_id}});
  }

  run.parsed = ParseInterpretation(rq.machine_interpretation, ctx.data.schema());
  run.groups = run.parsed.groups;
  if (run.groups.empty()) run.groups.emplace_back();
  run.run_id = ctx.store.CreateRunId(type.id);

  Workspace ws(ctx.data, ctx.model, config);
  const auto features = ctx.data.feature_names();
  std::string model_id = ctx.model_ref.value("id", ctx.model.Id());

  for (size_t g = 0; g < run.groups.size(); ++g) {
    const FeatureGroup& group = run.groups[g];
    const std::string group_text = GroupText(group);
    RecordSet records;
    try {
      records = FilterRecords(ctx.data, group);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFeasibleRecord) throw;
      records = ClosestRecords(ctx.data, group);
    }
    if (records.approximate) {
      run.warnings.push_back("approximate match: no record satisfies " + group_text +
                             " exactly; using the " + std::to_string(records.indices.size()) +
                             " closest records");
    }
    for (const auto& reg : explainers) {
      ExplainerResult res;
      res.explainer = reg.id;
      res.modality = reg.modality;
      res.group_index = g;
      res.group = group;
      res.focus = records.indices;
      res.approximate = records.approximate;
      res.dir = ctx.store.CreateExplainerDir(type.id, reg.id);
      res.output.header = OutputColumns(reg.modality, features);
      nlohmann::json explainer_cfg;
      auto t0 = Clock::now();
      std::string started = UtcTimestampIso();
      try {
        ExplainerFn fn = FindExplainer(reg.id);
        if (!fn) {
          throw Error(ErrorCode::kUnsupportedExplanationType,
                      "explainer '" + reg.id + "' has no implementation");
        }
        explainer_cfg = fn(ws, group_text, records.indices, res.output);
        res.metrics = ComputeMetrics(reg.modality, reg.id, res.output, res.focus, ws);
        res.ok = true;
      } catch (const Error& e) {
        res.ok = false;
        res.error = e.ToJson();
        res.output.rows.clear();
        run.warnings.push_back("explainer " + reg.id + " failed on " + group_text + ": " +
                               e.what());
      }
      double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

      auto dir = ctx.store.ExplainerDir(res.dir);
      std::vector<std::string> files = {"config.json", "metrics.json", "provenance.json"};
      if (res.ok) {
        WriteFile(dir / "output.csv", res.output.ToCsv());
        files.insert(files.begin(), "output.csv");
      }
      nlohmann::json metrics_json = nlohmann::json::array();
      for (const auto& m : res.metrics) metrics_json.push_back(m.ToJson());
      nlohmann::json cfg = {{"explainer", reg.id},
                            {"explanation_type", type.id},
                            {"modality", std::string(ModalityName(reg.modality))},
                            {"group", qx::ToJson(group)},
                            {"group_index", g},
                            {"focus", records.indices},
                            {"approximate", records.approximate},
                            {"config", explainer_cfg},
                            {"dataset_hash", ctx.data.hash()},
                            {"model_id", model_id}};
      if (!res.ok) cfg["error"] = res.error;
      WriteFile(dir / "config.json", cfg.dump(2) + "\n");
      WriteFile(dir / "metrics.json", metrics_json.dump(2) + "\n");
      nlohmann::json prov = {{"run_id", run.run_id},
                             {"rq", qx::ToJson(rq)},
                             {"group", qx::ToJson(group)},
                             {"dataset", ctx.dataset_ref},
                             {"dataset_hash", ctx.data.hash()},
                             {"model_id", model_id},
                             {"started", started},
                             {"finished", UtcTimestampIso()},
                             {"runtime_ms", ms},
                             {"files", files}};
      WriteFile(dir / "provenance.json", prov.dump(2) + "\n");
      run.results.push_back(std::move(res));
    }
  }
  run.finished = UtcTimestampIso();
  ctx.store.WriteRecord(run.run_id, run.ToJson());
  return run;
}

std::vector<std::vector<MetricReport>> RecomputeMetrics(const DelegateRun& run,
                                                        const Dataset& data,
                                                        const TrainedModel& model) {
  Workspace ws(data, model, run.config);
  std::vector<std::vector<MetricReport>> out;
  for (const auto& r : run.results) {
    out.push_back(r.ok ? ComputeMetrics(r.modality, r.explainer, r.output, r.focus, ws)
                       : std::vector<MetricReport>{});
  }
  return out;
}

nlohmann::json ParseStats::ToJson() const {
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [t, c] : per_type) {
    types[t] = {{"usable", c.usable}, {"unusable", c.unusable}};
  }
  return {{"total", total},
          {"usable", usable},
          {"unusable", unusable},
          {"per_type", types},
          {"unusable_examples", unusable_examples}};
}

ParseStats ComputeParseStats(const std::vector<ReframedQuestion>& log,
                             const Schema& schema, const Registry& registry) {
  ParseStats s;
  for (const auto& t : registry.types()) s.per_type[t.id];
  for (const auto& rq : log) {
    ++s.total;
    bool ok = true;
    try {
      ParseInterpretation(rq.machine_interpretation, schema);
    } catch (const Error&) {
      ok = false;
    }
    auto& c = s.per_type[rq.explanation_type];
    if (ok) {
      ++s.usable;
      ++c.usable;
    } else {
      ++s.unusable;
      ++c.unusable;
      if (s.unusable_examples.size() < 10) {
        s.unusable_examples.push_back(rq.machine_interpretation);
      }
    }
  }
  return s;
}

}  // namespace qx
