// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "actkv/error.hpp"

namespace actkv {

namespace {

double chunk_score(std::span<const float> probe, const KVChunk& chunk, RepMode mode) {
  if (mode == RepMode::Mean) return cosine_or_zero(probe, chunk.rep_key.span());
  double best = -1.0;
  for (std::size_t r = 0; r < chunk.keys.rows(); ++r) {
    best = std::max(best, cosine_or_zero(probe, chunk.keys.row(r)));
  }
  return best;
}

}  // namespace

std::vector<ScoredChunk> score_chunks(std::span<const float> probe, const CacheView& view,
                                      RepMode mode) {
  if (probe.size() != view.dim && view.dim != 0) {
    throw Error(Errc::DimMismatch, "probe dimension " + std::to_string(probe.size()) +
                                       " != cache dimension " + std::to_string(view.dim));
  }
  std::vector<ScoredChunk> out;
  for (const auto& chunk : view.retrievable()) {
    out.push_back({chunk->chunk_id, chunk_score(probe, *chunk, mode), chunk->size()});
  }
  return out;
}

std::vector<ScoredChunk> score_chunks(std::span<const DenseVector> probes,
                                      std::span<const CacheView> views, RepMode mode) {
  if (probes.size() != views.size() || probes.empty()) {
    throw Error(Errc::LengthMismatch, "score_chunks needs one probe per head view");
  }
  auto total = score_chunks(probes[0].span(), views[0], mode);
  for (std::size_t h = 1; h < views.size(); ++h) {
    const auto head = score_chunks(probes[h].span(), views[h], mode);
    if (head.size() != total.size()) {
      throw Error(Errc::ShapeMismatch, "heads expose different chunk sets");
    }
    for (std::size_t i = 0; i < head.size(); ++i) {
      if (head[i].chunk_id != total[i].chunk_id) {
        throw Error(Errc::ShapeMismatch, "heads expose different chunk ids");
      }
      total[i].score += head[i].score;
    }
  }
  if (views.size() > 1) {
    const double n = static_cast<double>(views.size());
    for (auto& s : total) s.score /= n;
  }
  return total;
}

SelectionResult select_topk(std::span<const ScoredChunk> scored, std::size_t budget_pairs,
                            std::size_t chunk_size) {
  SelectionResult result;
  if (chunk_size == 0 || budget_pairs < 1) return result;
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
    return scored[a].chunk_id < scored[b].chunk_id;
  });
  for (std::size_t idx : order) {
    const std::size_t pairs = scored[idx].pairs ? scored[idx].pairs : chunk_size;
    if (result.pairs_used + pairs > budget_pairs) break;
    result.selected.push_back(scored[idx].chunk_id);
    result.pairs_used += pairs;
  }
  return result;
}

Materialized materialize(const SelectionResult& selection, const CacheView& view) {
  std::vector<const KVChunk*> chunks;
  chunks.reserve(selection.selected.size());
  for (std::int64_t id : selection.selected) {
    const KVChunk* chunk = view.find(id);
    if (!chunk) throw Error(Errc::UnknownChunk, "chunk " + std::to_string(id) + " not in view");
    chunks.push_back(chunk);
  }
  std::sort(chunks.begin(), chunks.end(),
            [](const KVChunk* a, const KVChunk* b) { return a->span.first < b->span.first; });
  Materialized out{DenseMatrix(0, view.dim), DenseMatrix(0, view.dim)};
  for (const KVChunk* chunk : chunks) {
    out.keys.append_rows(chunk->keys);
    out.values.append_rows(chunk->values);
  }
  return out;
}

}  // namespace actkv
