// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "actkv/cache.hpp"
#include "actkv/linalg.hpp"

namespace actkv {

struct ScoredChunk {
  std::int64_t chunk_id = 0;
  double score = 0.0;
  std::size_t pairs = 0;

  friend bool operator==(const ScoredChunk&, const ScoredChunk&) = default;
};

struct SelectionResult {
  std::vector<std::int64_t> selected;  // descending score
  std::size_t pairs_used = 0;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

// Scores the retrievable chunks of one head against its probe vector.
std::vector<ScoredChunk> score_chunks(std::span<const float> probe, const CacheView& view,
                                      RepMode mode);

// Scores one layer across heads: probes[h] is matched against views[h] and
// the per-head cosines of each chunk are averaged. All views must expose the
// same chunk ids.
std::vector<ScoredChunk> score_chunks(std::span<const DenseVector> probes,
                                      std::span<const CacheView> views, RepMode mode);

// Greedy descending-score selection, older chunk first on ties, stopping at
// the first chunk that no longer fits in budget_pairs.
SelectionResult select_topk(std::span<const ScoredChunk> scored, std::size_t budget_pairs,
                            std::size_t chunk_size);

struct Materialized {
  DenseMatrix keys;
  DenseMatrix values;
};

// Concatenates the selected chunks in token order. Throws UnknownChunk.
Materialized materialize(const SelectionResult& selection, const CacheView& view);

}  // namespace actkv
