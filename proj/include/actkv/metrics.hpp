// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "actkv/engine.hpp"
#include "actkv/retrieval.hpp"
#include "actkv/trace.hpp"

namespace actkv {

// exp(entropy(softmax(scores))). Throws EmptyInput.
double score_perplexity(std::span<const double> scores);

// |selected ∩ truth| / |truth|; nullopt for empty truth.
std::optional<double> recall_at_budget(const SelectionResult& selection,
                                       std::span<const std::int64_t> truth);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Linear-interpolation quantile of unsorted data, p in [0, 1].
double quantile(std::vector<double> values, double p);
FiveNumber five_number(std::vector<double> values);

struct MetricSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

MetricSummary summarize(std::vector<double> values);

struct LayerMetrics {
  int layer = 0;
  std::size_t steps = 0;
  FiveNumber scores;                    // every chunk score of every step
  MetricSummary perplexity;             // per-step score perplexity
  std::optional<MetricSummary> recall;  // steps with ground truth only
  MetricSummary budget;
};

struct StageMetrics {
  std::vector<LayerMetrics> layers;
  double mean_perplexity = 0.0;
  std::optional<double> mean_recall;
};

struct AnalysisReport {
  std::string probe_mode;
  std::string cutoff_mode;
  nlohmann::json config;  // echo; must match between compared runs
  StageMetrics all;
  StageMetrics prefill;
  StageMetrics decode;

  nlohmann::json to_json() const;
  static AnalysisReport from_json(const nlohmann::json& j);
  // CSV with columns layer,metric,mean,p25,p50,p75; metric is "<stage>.<name>".
  std::string to_csv() const;
};

// Aggregates step records. Truth is ignored when its chunk geometry differs
// from the config's.
AnalysisReport analyze(std::span<const StepRecord> records, const EngineConfig& config,
                       const std::optional<GroundTruth>& truth, nlohmann::json config_echo);

struct LayerDelta {
  int layer = 0;
  double recall_delta = 0.0;      // mean over pairs of a - b
  double perplexity_delta = 0.0;  // mean over pairs of a - b
};

struct StageComparison {
  std::vector<LayerDelta> layers;
  double recall_delta = 0.0;
  double perplexity_delta = 0.0;
  double frac_recall_a_ge_b = 0.0;
  double frac_recall_a_gt_b = 0.0;
  double frac_perplexity_a_lt_b = 0.0;
  double sign_test_recall_p = 1.0;
  double sign_test_perplexity_p = 1.0;
};

struct Comparison {
  std::size_t pairs = 0;
  std::string mode_a;
  std::string mode_b;
  StageComparison all;
  StageComparison prefill;
  StageComparison decode;

  nlohmann::json to_json() const;
};

// Paired comparison of report a_i against b_i (one pair per seed). Throws
// ConfigMismatch when a pair's config echoes differ or layer counts differ.
Comparison compare_runs(std::span<const std::pair<AnalysisReport, AnalysisReport>> pairs);

// Two-sided exact sign test over non-tied pairs.
double sign_test_p(std::size_t wins, std::size_t losses);

}  // namespace actkv
