// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/probe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actkv/error.hpp"

namespace actkv {

std::string_view to_string(Stage stage) { return stage == Stage::Prefill ? "prefill" : "decode"; }

std::string_view to_string(ProbeMode mode) { return mode == ProbeMode::Activation ? "act" : "mean"; }

ProbeMode probe_mode_from_string(std::string_view name) {
  if (name == "act" || name == "activation") return ProbeMode::Activation;
  if (name == "mean") return ProbeMode::Mean;
  throw Error(Errc::InvalidConfig, "unknown probe mode '" + std::string(name) + "'");
}

void StreamingStats::update(const DenseMatrix& window_queries) {
  if (mean_.empty() && count_ == 0) {
    mean_.assign(window_queries.cols(), 0.0);
    m2_.assign(window_queries.cols(), 0.0);
  }
  if (window_queries.cols() != mean_.size()) {
    throw Error(Errc::DimMismatch, "update_stats: window has " +
                                       std::to_string(window_queries.cols()) + " columns, stats have " +
                                       std::to_string(mean_.size()));
  }
  const std::size_t rows = window_queries.rows();
  if (rows == 0) return;

  // Two-pass moments of the window, then the pairwise merge.
  const std::size_t d = mean_.size();
  std::vector<double> wmean(d, 0.0), wm2(d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto q = window_queries.row(r);
    for (std::size_t i = 0; i < d; ++i) wmean[i] += q[i];
  }
  for (double& x : wmean) x /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto q = window_queries.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = q[i] - wmean[i];
      wm2[i] += dev * dev;
    }
  }

  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(rows);
  const double n = na + nb;
  for (std::size_t i = 0; i < d; ++i) {
    const double delta = wmean[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += wm2[i] + delta * delta * na * nb / n;
  }
  count_ += static_cast<std::int64_t>(rows);
}

const std::vector<double>& StreamingStats::mean() const {
  if (count_ < 1) throw Error(Errc::StatsUndefined, "mean needs at least one query");
  return mean_;
}

std::vector<double> StreamingStats::variance() const {
  if (count_ < 2) throw Error(Errc::StatsUndefined, "variance needs at least two queries");
  std::vector<double> var(m2_.size());
  const double denom = static_cast<double>(count_ - 1);
  for (std::size_t i = 0; i < var.size(); ++i) var[i] = std::max(m2_[i] / denom, 0.0);
  return var;
}

StreamingStats update_stats(StreamingStats stats, const DenseMatrix& window_queries) {
  stats.update(window_queries);
  return stats;
}

double anchor_score(std::span<const float> q, const StreamingStats& stats) {
  const auto& mean = stats.mean();
  if (q.size() != mean.size()) throw Error(Errc::DimMismatch, "anchor_score: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double dev = mean[i] - q[i];
    acc += dev * dev;
  }
  return std::sqrt(acc);
}

ActivationBias uniform_bias(std::size_t rows) {
  ActivationBias bias;
  bias.weights.assign(rows, rows ? 1.0 / static_cast<double>(rows) : 0.0);
  bias.fallback = true;
  return bias;
}

ActivationBias activation_bias(const DenseMatrix& window_queries, const StreamingStats& stats) {
  if (stats.count() < 2) throw Error(Errc::StatsUndefined, "activation bias needs count >= 2");
  const auto& mean = stats.mean();
  const auto var = stats.variance();
  const std::size_t d = mean.size();
  if (window_queries.cols() != d) throw Error(Errc::DimMismatch, "activation_bias: dimension mismatch");

  const std::size_t m = window_queries.rows();
  ActivationBias bias;
  bias.phi = DenseMatrix(m, d);
  std::vector<double> row_l1(m, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    auto q = window_queries.row(j);
    auto phi = bias.phi.row(j);
    double l1 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = q[i] - mean[i];
      const double value = dev * dev / std::max(var[i], kVarianceFloor);
      phi[i] = static_cast<float>(value);
      l1 += value;
    }
    row_l1[j] = l1;
    total += l1;
  }
  if (!(total > 0.0)) {
    auto uniform = uniform_bias(m);
    uniform.phi = std::move(bias.phi);
    return uniform;
  }
  bias.weights.resize(m);
  for (std::size_t j = 0; j < m; ++j) bias.weights[j] = row_l1[j] / total;
  return bias;
}

ProbeQuery build_probe(const DenseMatrix& window_queries, const ActivationBias& bias) {
  if (bias.weights.size() != window_queries.rows()) {
    throw Error(Errc::LengthMismatch, "build_probe: " + std::to_string(bias.weights.size()) +
                                          " weights for " + std::to_string(window_queries.rows()) +
                                          " queries");
  }
  const std::size_t d = window_queries.cols();
  std::vector<double> acc(d, 0.0);
  for (std::size_t j = 0; j < window_queries.rows(); ++j) {
    const double w = bias.weights[j];
    if (w == 0.0) continue;
    auto q = window_queries.row(j);
    for (std::size_t i = 0; i < d; ++i) acc[i] += w * q[i];
  }
  ProbeQuery probe;
  probe.vector = DenseVector(d);
  for (std::size_t i = 0; i < d; ++i) probe.vector[i] = static_cast<float>(acc[i]);
  probe.stage = Stage::Prefill;
  return probe;
}

ProbeQuery decoding_probe(std::span<const float> q) {
  ProbeQuery probe;
  probe.vector = DenseVector(std::vector<float>(q.begin(), q.end()));
  probe.stage = Stage::Decode;
  return probe;
}

}  // namespace actkv
