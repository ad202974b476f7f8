// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "actkv/cache.hpp"
#include "actkv/cutoff.hpp"
#include "actkv/linalg.hpp"
#include "actkv/probe.hpp"
#include "actkv/retrieval.hpp"
#include "actkv/step.hpp"

namespace actkv {

enum class CutoffMode { Dynamic, Fixed };

std::string_view to_string(CutoffMode mode);
CutoffMode cutoff_mode_from_string(std::string_view name);

struct EngineConfig {
  std::size_t d = 64;  // model dim, split evenly over heads
  int layers = 4;
  int heads = 1;
  std::size_t window = 256;
  std::size_t chunk_size = 32;
  std::size_t n_sink = 64;
  std::size_t n_local = 512;
  std::size_t budget = 1472;  // retrieved pairs per layer (k)
  ProbeMode probe_mode = ProbeMode::Activation;
  CutoffMode cutoff_mode = CutoffMode::Dynamic;
  RepMode rep_mode = RepMode::Mean;
  std::uint64_t seed = 0;

  std::size_t head_dim() const noexcept { return heads > 0 ? d / static_cast<std::size_t>(heads) : 0; }
  std::size_t total_budget() const noexcept { return n_sink + n_local + budget; }

  // Throws InvalidConfig on zero dimensions, d not divisible by heads, or a
  // budget that is not a multiple of the chunk size.
  void validate() const;
};

struct LayerRecord {
  int layer = 0;
  std::vector<float> probe;  // heads concatenated
  std::vector<std::int64_t> chunk_ids;
  std::vector<double> scores;
  double theta = 0.0;
  std::int64_t budget = 0;
  std::vector<std::int64_t> selected;
  std::size_t pairs_used = 0;
  std::size_t attended_pairs = 0;  // sinks + retrieved + local, current tokens excluded
  double checksum = 0.0;           // sum of the attention output
  double max_weight_error = 0.0;   // max |sum of attention row - 1|

  friend bool operator==(const LayerRecord&, const LayerRecord&) = default;
};

struct StepRecord {
  std::int64_t step = 0;
  Stage stage = Stage::Prefill;
  std::int64_t index = 0;
  std::vector<LayerRecord> layers;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

// Row-normalized softmax(Q K^T / sqrt(d_head)). With `causal`, the last
// Q.rows() keys form the current block and query i only sees block rows <= i.
std::vector<double> attention_weights(const DenseMatrix& q, const DenseMatrix& k, bool causal);

// softmax(Q K^T / sqrt(d_head)) V. Throws ShapeMismatch.
DenseMatrix reference_attention(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v,
                                bool causal);

struct AttentionResult {
  DenseMatrix output;
  double max_row_error = 0.0;  // max |sum of a weight row - 1|
};

// reference_attention plus the normalization check, in one pass.
AttentionResult attend(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v, bool causal);

// Sliding-window inference loop over per-(layer, head) KV caches.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  // Extra query rows appended to every window's Q before probe construction.
  // Indexed layer * H + head.
  void set_task_queries(std::vector<DenseMatrix> queries);

  StepRecord prefill_step(const StepTensors& window);
  StepRecord decode_step(const StepTensors& token);

  const EngineConfig& config() const noexcept { return config_; }
  const KVCache& cache() const noexcept { return cache_; }
  const StreamingStats& stats(int layer, int head) const;
  // Attention output of the last step, one (tokens x d) matrix per layer.
  const std::vector<DenseMatrix>& last_outputs() const noexcept { return last_outputs_; }
  std::int64_t steps() const noexcept { return step_; }

 private:
  void check_shape(const StepTensors& t, std::size_t tokens) const;
  ProbeQuery window_probe(int layer, int head, const DenseMatrix& queries);
  void attend_layer(int layer, const StepTensors& t, std::span<const CacheView> views,
                    const SelectionResult& selection, LayerRecord& record);
  void append_step(const StepTensors& t);

  EngineConfig config_;
  KVCache cache_;
  std::vector<StreamingStats> stats_;
  std::vector<DenseMatrix> task_queries_;
  std::vector<DenseMatrix> last_outputs_;
  std::int64_t step_ = 0;
};

}  // namespace actkv
