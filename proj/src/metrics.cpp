// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "actkv/cutoff.hpp"
#include "actkv/error.hpp"
#include "actkv/linalg.hpp"

namespace actkv {

using nlohmann::json;

double score_perplexity(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "perplexity of no scores");
  return std::max(1.0, std::exp(entropy(softmax(scores))));
}

std::optional<double> recall_at_budget(const SelectionResult& selection,
                                       std::span<const std::int64_t> truth) {
  const std::set<std::int64_t> relevant(truth.begin(), truth.end());
  if (relevant.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::int64_t id : std::set<std::int64_t>(selection.selected.begin(), selection.selected.end())) {
    hits += relevant.count(id);
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::EmptyInput, "quantile of no values");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FiveNumber five_number(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  return {values.front(), quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75),
          values.back()};
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.p25 = quantile(values, 0.25);
  s.p50 = quantile(values, 0.5);
  s.p75 = quantile(values, 0.75);
  return s;
}

namespace {

struct LayerAccumulator {
  std::size_t steps = 0;
  std::vector<double> scores;
  std::vector<double> perplexities;
  std::vector<double> recalls;
  std::vector<double> budgets;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

StageMetrics finish_stage(std::vector<LayerAccumulator>& acc) {
  StageMetrics stage;
  std::vector<double> all_perplexity;
  std::vector<double> all_recall;
  for (std::size_t l = 0; l < acc.size(); ++l) {
    auto& a = acc[l];
    LayerMetrics m;
    m.layer = static_cast<int>(l);
    m.steps = a.steps;
    m.scores = five_number(a.scores);
    m.perplexity = summarize(a.perplexities);
    if (!a.recalls.empty()) m.recall = summarize(a.recalls);
    m.budget = summarize(a.budgets);
    all_perplexity.insert(all_perplexity.end(), a.perplexities.begin(), a.perplexities.end());
    all_recall.insert(all_recall.end(), a.recalls.begin(), a.recalls.end());
    stage.layers.push_back(std::move(m));
  }
  stage.mean_perplexity = mean_of(all_perplexity);
  if (!all_recall.empty()) stage.mean_recall = mean_of(all_recall);
  return stage;
}

json summary_json(const MetricSummary& s) {
  return json{{"n", s.n}, {"mean", s.mean}, {"p25", s.p25}, {"p50", s.p50}, {"p75", s.p75}};
}

MetricSummary summary_from_json(const json& j) {
  MetricSummary s;
  s.n = j.at("n").get<std::size_t>();
  s.mean = j.at("mean").get<double>();
  s.p25 = j.at("p25").get<double>();
  s.p50 = j.at("p50").get<double>();
  s.p75 = j.at("p75").get<double>();
  return s;
}

json stage_json(const StageMetrics& stage) {
  json layers = json::array();
  for (const auto& m : stage.layers) {
    layers.push_back({{"layer", m.layer},
                      {"steps", m.steps},
                      {"scores",
                       {{"min", m.scores.min},
                        {"q1", m.scores.q1},
                        {"median", m.scores.median},
                        {"q3", m.scores.q3},
                        {"max", m.scores.max}}},
                      {"perplexity", summary_json(m.perplexity)},
                      {"recall", m.recall ? summary_json(*m.recall) : json(nullptr)},
                      {"budget", summary_json(m.budget)}});
  }
  return json{{"mean_perplexity", stage.mean_perplexity},
              {"mean_recall", stage.mean_recall ? json(*stage.mean_recall) : json(nullptr)},
              {"layers", std::move(layers)}};
}

StageMetrics stage_from_json(const json& j) {
  StageMetrics stage;
  stage.mean_perplexity = j.at("mean_perplexity").get<double>();
  if (!j.at("mean_recall").is_null()) stage.mean_recall = j.at("mean_recall").get<double>();
  for (const auto& l : j.at("layers")) {
    LayerMetrics m;
    m.layer = l.at("layer").get<int>();
    m.steps = l.at("steps").get<std::size_t>();
    const auto& s = l.at("scores");
    m.scores = {s.at("min").get<double>(), s.at("q1").get<double>(), s.at("median").get<double>(),
                s.at("q3").get<double>(), s.at("max").get<double>()};
    m.perplexity = summary_from_json(l.at("perplexity"));
    if (!l.at("recall").is_null()) m.recall = summary_from_json(l.at("recall"));
    m.budget = summary_from_json(l.at("budget"));
    stage.layers.push_back(std::move(m));
  }
  return stage;
}

}  // namespace

AnalysisReport analyze(std::span<const StepRecord> records, const EngineConfig& config,
                       const std::optional<GroundTruth>& truth, json config_echo) {
  const bool truth_usable = truth && truth->n_sink == config.n_sink &&
                            truth->chunk_size == config.chunk_size;
  const auto layers = static_cast<std::size_t>(config.layers);
  std::vector<LayerAccumulator> all(layers), prefill(layers), decode(layers);

  for (const auto& record : records) {
    const TruthEntry* entry = truth_usable ? truth->find(record.stage, record.index) : nullptr;
    auto& stage_acc = record.stage == Stage::Prefill ? prefill : decode;
    for (const auto& lr : record.layers) {
      const auto l = static_cast<std::size_t>(lr.layer);
      if (l >= layers) throw Error(Errc::ShapeMismatch, "record layer outside config");
      std::optional<double> recall;
      if (entry && l < entry->per_layer.size()) {
        SelectionResult sel{lr.selected, lr.pairs_used};
        recall = recall_at_budget(sel, entry->per_layer[l]);
      }
      for (auto* acc : {&all[l], &stage_acc[l]}) {
        ++acc->steps;
        acc->scores.insert(acc->scores.end(), lr.scores.begin(), lr.scores.end());
        if (!lr.scores.empty()) acc->perplexities.push_back(score_perplexity(lr.scores));
        if (recall) acc->recalls.push_back(*recall);
        acc->budgets.push_back(static_cast<double>(lr.budget));
      }
    }
  }

  AnalysisReport report;
  report.probe_mode = std::string(to_string(config.probe_mode));
  report.cutoff_mode = std::string(to_string(config.cutoff_mode));
  report.config = std::move(config_echo);
  report.all = finish_stage(all);
  report.prefill = finish_stage(prefill);
  report.decode = finish_stage(decode);
  return report;
}

json AnalysisReport::to_json() const {
  return json{{"probe_mode", probe_mode},
              {"cutoff_mode", cutoff_mode},
              {"config", config},
              {"stages", {{"all", stage_json(all)}, {"prefill", stage_json(prefill)}, {"decode", stage_json(decode)}}}};
}

AnalysisReport AnalysisReport::from_json(const json& j) {
  try {
    AnalysisReport r;
    r.probe_mode = j.at("probe_mode").get<std::string>();
    r.cutoff_mode = j.at("cutoff_mode").get<std::string>();
    r.config = j.at("config");
    const auto& stages = j.at("stages");
    r.all = stage_from_json(stages.at("all"));
    r.prefill = stage_from_json(stages.at("prefill"));
    r.decode = stage_from_json(stages.at("decode"));
    return r;
  } catch (const json::exception& ex) {
    throw Error(Errc::Malformed, std::string("report: ") + ex.what());
  }
}

std::string AnalysisReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "layer,metric,mean,p25,p50,p75\n";
  // Metric names carry the stage, e.g. "prefill.recall".
  const auto row = [&](const char* stage, int layer, const char* metric, const MetricSummary& s) {
    out << layer << ',' << stage << '.' << metric << ',' << s.mean << ',' << s.p25 << ',' << s.p50
        << ',' << s.p75 << '\n';
  };
  for (const auto& [name, stage] : {std::pair{"all", &all}, {"prefill", &prefill}, {"decode", &decode}}) {
    for (const auto& m : stage->layers) {
      row(name, m.layer, "perplexity", m.perplexity);
      if (m.recall) row(name, m.layer, "recall", *m.recall);
      row(name, m.layer, "budget", m.budget);
    }
  }
  return out.str();
}

double sign_test_p(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(wins, losses);
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                              std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
    tail += std::exp(log_choose + log_half_n);
  }
  return std::min(1.0, 2.0 * tail);
}

namespace {

StageComparison compare_stage(std::span<const std::pair<AnalysisReport, AnalysisReport>> pairs,
                              StageMetrics AnalysisReport::*member) {
  StageComparison out;
  if (pairs.empty()) return out;
  const std::size_t layers = (pairs[0].first.*member).layers.size();
  std::vector<double> recall_sum(layers, 0.0), ppl_sum(layers, 0.0);
  std::vector<std::size_t> recall_n(layers, 0);
  std::size_t recall_pairs = 0, recall_ge = 0, recall_gt = 0, recall_lt = 0;
  std::size_t ppl_lt = 0, ppl_gt = 0;
  double recall_total = 0.0, ppl_total = 0.0;

  for (const auto& [ra, rb] : pairs) {
    const StageMetrics& a = ra.*member;
    const StageMetrics& b = rb.*member;
    for (std::size_t l = 0; l < layers; ++l) {
      ppl_sum[l] += a.layers[l].perplexity.mean - b.layers[l].perplexity.mean;
      if (a.layers[l].recall && b.layers[l].recall) {
        recall_sum[l] += a.layers[l].recall->mean - b.layers[l].recall->mean;
        ++recall_n[l];
      }
    }
    ppl_total += a.mean_perplexity - b.mean_perplexity;
    ppl_lt += a.mean_perplexity < b.mean_perplexity;
    ppl_gt += a.mean_perplexity > b.mean_perplexity;
    if (a.mean_recall && b.mean_recall) {
      ++recall_pairs;
      recall_total += *a.mean_recall - *b.mean_recall;
      recall_ge += *a.mean_recall >= *b.mean_recall;
      recall_gt += *a.mean_recall > *b.mean_recall;
      recall_lt += *a.mean_recall < *b.mean_recall;
    }
  }
  const double n = static_cast<double>(pairs.size());
  for (std::size_t l = 0; l < layers; ++l) {
    out.layers.push_back({static_cast<int>(l),
                          recall_n[l] ? recall_sum[l] / static_cast<double>(recall_n[l]) : 0.0,
                          ppl_sum[l] / n});
  }
  out.perplexity_delta = ppl_total / n;
  out.frac_perplexity_a_lt_b = static_cast<double>(ppl_lt) / n;
  out.sign_test_perplexity_p = sign_test_p(ppl_lt, ppl_gt);
  if (recall_pairs) {
    const double rn = static_cast<double>(recall_pairs);
    out.recall_delta = recall_total / rn;
    out.frac_recall_a_ge_b = static_cast<double>(recall_ge) / rn;
    out.frac_recall_a_gt_b = static_cast<double>(recall_gt) / rn;
    out.sign_test_recall_p = sign_test_p(recall_gt, recall_lt);
  }
  return out;
}

json stage_comparison_json(const StageComparison& s) {
  json layers = json::array();
  for (const auto& l : s.layers) {
    layers.push_back({{"layer", l.layer}, {"recall_delta", l.recall_delta}, {"perplexity_delta", l.perplexity_delta}});
  }
  return json{{"recall_delta", s.recall_delta},
              {"perplexity_delta", s.perplexity_delta},
              {"frac_recall_a_ge_b", s.frac_recall_a_ge_b},
              {"frac_recall_a_gt_b", s.frac_recall_a_gt_b},
              {"frac_perplexity_a_lt_b", s.frac_perplexity_a_lt_b},
              {"sign_test_recall_p", s.sign_test_recall_p},
              {"sign_test_perplexity_p", s.sign_test_perplexity_p},
              {"layers", std::move(layers)}};
}

}  // namespace

Comparison compare_runs(std::span<const std::pair<AnalysisReport, AnalysisReport>> pairs) {
  for (const auto& [a, b] : pairs) {
    if (a.config != b.config) {
      throw Error(Errc::ConfigMismatch, "reports come from different traces or configs");
    }
    if (a.all.layers.size() != pairs[0].first.all.layers.size() ||
        b.all.layers.size() != a.all.layers.size() || a.prefill.layers.size() != b.prefill.layers.size() ||
        a.decode.layers.size() != b.decode.layers.size()) {
      throw Error(Errc::ConfigMismatch, "reports have different layer counts");
    }
  }
  Comparison c;
  c.pairs = pairs.size();
  if (!pairs.empty()) {
    c.mode_a = pairs[0].first.probe_mode + "/" + pairs[0].first.cutoff_mode;
    c.mode_b = pairs[0].second.probe_mode + "/" + pairs[0].second.cutoff_mode;
  }
  c.all = compare_stage(pairs, &AnalysisReport::all);
  c.prefill = compare_stage(pairs, &AnalysisReport::prefill);
  c.decode = compare_stage(pairs, &AnalysisReport::decode);
  return c;
}

json Comparison::to_json() const {
  return json{{"pairs", pairs},
              {"mode_a", mode_a},
              {"mode_b", mode_b},
              {"stages",
               {{"all", stage_comparison_json(all)},
                {"prefill", stage_comparison_json(prefill)},
                {"decode", stage_comparison_json(decode)}}}};
}

}  // namespace actkv
