// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "actkv/linalg.hpp"

namespace actkv {

// Running per-dimension mean and sample variance over every query vector seen
// by one (layer, head) stream. Windows are merged with the pairwise
// (Chan et al.) update so the result matches a batch pass over the
// concatenation.
class StreamingStats {
 public:
  StreamingStats() = default;
  explicit StreamingStats(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void update(const DenseMatrix& window_queries);

  std::int64_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return mean_.size(); }

  // Throws StatsUndefined when count < 1.
  const std::vector<double>& mean() const;
  // Bessel-corrected; throws StatsUndefined when count < 2.
  std::vector<double> variance() const;

 private:
  std::int64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Returns a copy of stats with window_queries folded in.
StreamingStats update_stats(StreamingStats stats, const DenseMatrix& window_queries);

// ||mean - q||_2. Larger means more anchor-like.
double anchor_score(std::span<const float> q, const StreamingStats& stats);

inline constexpr double kVarianceFloor = 1e-6;

struct ActivationBias {
  DenseMatrix phi;              // m x d, non-negative
  std::vector<double> weights;  // m entries summing to 1
  bool fallback = false;        // uniform weights were substituted
};

// phi_j = (q_j - mean)^2 / max(var, eps), weights_j = |phi_j|_1 / sum_i |phi_i|_1.
// Throws StatsUndefined when stats.count() < 2. An all-zero phi yields uniform
// weights with fallback set.
ActivationBias activation_bias(const DenseMatrix& window_queries, const StreamingStats& stats);

// Uniform weights: the mean-pooling probe.
ActivationBias uniform_bias(std::size_t rows);

enum class Stage { Prefill, Decode };

std::string_view to_string(Stage stage);

struct ProbeQuery {
  DenseVector vector;
  int layer = 0;
  int head = 0;
  Stage stage = Stage::Prefill;
};

// sum_j weights_j q_j. Throws LengthMismatch when the weight count differs
// from the row count.
ProbeQuery build_probe(const DenseMatrix& window_queries, const ActivationBias& bias);

ProbeQuery decoding_probe(std::span<const float> q);

enum class ProbeMode { Activation, Mean };

std::string_view to_string(ProbeMode mode);
ProbeMode probe_mode_from_string(std::string_view name);

}  // namespace actkv
