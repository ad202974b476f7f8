// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/cache.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "actkv/error.hpp"

namespace actkv {

std::string_view to_string(RepMode mode) {
  return mode == RepMode::Mean ? "mean" : "max-score";
}

RepMode rep_mode_from_string(std::string_view name) {
  if (name == "mean") return RepMode::Mean;
  if (name == "max-score") return RepMode::MaxScore;
  throw Error(Errc::InvalidConfig, "unknown representative mode '" + std::string(name) + "'");
}

DenseVector rep_key_of(const DenseMatrix& keys, RepMode /*mode*/) {
  if (keys.rows() == 0) throw Error(Errc::EmptyInput, "rep_key_of: no keys");
  return column_mean(keys);
}

std::vector<std::shared_ptr<const KVChunk>> CacheView::retrievable() const {
  std::vector<std::shared_ptr<const KVChunk>> out;
  for (const auto& chunk : chunks) {
    if (chunk->span.last < local_first) out.push_back(chunk);
  }
  if (open_chunk && open_chunk->span.last < local_first) out.push_back(open_chunk);
  return out;
}

const KVChunk* CacheView::find(std::int64_t chunk_id) const {
  if (chunk_id >= 0 && static_cast<std::size_t>(chunk_id) < chunks.size()) {
    return chunks[static_cast<std::size_t>(chunk_id)].get();
  }
  if (open_chunk && open_chunk->chunk_id == chunk_id) return open_chunk.get();
  return nullptr;
}

StreamCache::StreamCache(int layer, int head, std::size_t dim, const CacheConfig& config)
    : layer_(layer), head_(head), dim_(dim), config_(config) {
  if (dim_ == 0) throw Error(Errc::InvalidConfig, "cache dimension must be positive");
  if (config_.chunk_size == 0) throw Error(Errc::InvalidConfig, "chunk size must be positive");
  sink_keys_ = DenseMatrix(0, dim_);
  sink_values_ = DenseMatrix(0, dim_);
  open_keys_ = DenseMatrix(0, dim_);
  open_values_ = DenseMatrix(0, dim_);
  local_keys_.assign(config_.n_local * dim_, 0.0f);
  local_values_.assign(config_.n_local * dim_, 0.0f);
  if (config_.spill_dir) {
    spill_path_ = *config_.spill_dir /
                  ("layer" + std::to_string(layer) + "_head" + std::to_string(head) + ".akvc");
    std::ofstream out(*spill_path_, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot create spill file " + spill_path_->string());
    write_spill_header(out, static_cast<std::uint32_t>(config_.chunk_size),
                       static_cast<std::uint32_t>(dim_));
  }
}

std::size_t StreamCache::append(const DenseMatrix& keys, const DenseMatrix& values) {
  if (keys.rows() == 0 || keys.rows() != values.rows() || keys.cols() != dim_ ||
      values.cols() != dim_) {
    throw Error(Errc::DimMismatch, "append expects equal non-empty K/V blocks of width " +
                                       std::to_string(dim_));
  }
  std::size_t sealed = 0;
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    auto k = keys.row(r);
    auto v = values.row(r);
    if (sink_keys_.rows() < config_.n_sink) {
      sink_keys_.append_row(k);
      sink_values_.append_row(v);
    } else {
      if (open_keys_.rows() == 0) open_first_ = total_;
      open_keys_.append_row(k);
      open_values_.append_row(v);
      push_local(k, v);
      if (open_keys_.rows() == config_.chunk_size) {
        seal();
        ++sealed;
      }
    }
    ++total_;
  }
  return sealed;
}

void StreamCache::push_local(std::span<const float> key, std::span<const float> value) {
  if (config_.n_local == 0) return;
  std::copy(key.begin(), key.end(), local_keys_.begin() + static_cast<std::ptrdiff_t>(local_head_ * dim_));
  std::copy(value.begin(), value.end(),
            local_values_.begin() + static_cast<std::ptrdiff_t>(local_head_ * dim_));
  local_head_ = (local_head_ + 1) % config_.n_local;
  local_count_ = std::min(local_count_ + 1, config_.n_local);
}

void StreamCache::seal() {
  auto chunk = std::make_shared<KVChunk>();
  chunk->chunk_id = static_cast<std::int64_t>(chunks_.size());
  chunk->layer = layer_;
  chunk->head = head_;
  chunk->span = {open_first_, open_first_ + static_cast<std::int64_t>(open_keys_.rows()) - 1};
  chunk->rep_key = rep_key_of(open_keys_);
  chunk->keys = std::move(open_keys_);
  chunk->values = std::move(open_values_);
  open_keys_ = DenseMatrix(0, dim_);
  open_values_ = DenseMatrix(0, dim_);
  if (spill_path_) {
    std::ofstream out(*spill_path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::Io, "cannot append to spill file " + spill_path_->string());
    append_spill_chunk(out, chunk->keys, chunk->values);
  }
  chunks_.push_back(std::move(chunk));
}

CacheView StreamCache::snapshot() const {
  CacheView view;
  view.dim = dim_;
  view.chunk_size = config_.chunk_size;
  view.total_pairs = total_;
  view.sink_keys = sink_keys_;
  view.sink_values = sink_values_;
  view.chunks = chunks_;
  if (open_keys_.rows() > 0) {
    auto open = std::make_shared<KVChunk>();
    open->chunk_id = static_cast<std::int64_t>(chunks_.size());
    open->layer = layer_;
    open->head = head_;
    open->span = {open_first_, open_first_ + static_cast<std::int64_t>(open_keys_.rows()) - 1};
    open->keys = open_keys_;
    open->values = open_values_;
    open->rep_key = rep_key_of(open_keys_);
    view.open_chunk = std::move(open);
  }
  view.local_keys = DenseMatrix(local_count_, dim_);
  view.local_values = DenseMatrix(local_count_, dim_);
  const std::size_t n_local = config_.n_local;
  for (std::size_t i = 0; i < local_count_; ++i) {
    const std::size_t slot = (local_head_ + n_local - local_count_ + i) % n_local;
    std::copy_n(local_keys_.begin() + static_cast<std::ptrdiff_t>(slot * dim_), dim_,
                view.local_keys.row(i).begin());
    std::copy_n(local_values_.begin() + static_cast<std::ptrdiff_t>(slot * dim_), dim_,
                view.local_values.row(i).begin());
  }
  view.local_first = total_ - static_cast<std::int64_t>(local_count_);
  return view;
}

std::pair<DenseMatrix, DenseMatrix> StreamCache::all_pairs() const {
  DenseMatrix keys = sink_keys_;
  DenseMatrix values = sink_values_;
  for (const auto& chunk : chunks_) {
    keys.append_rows(chunk->keys);
    values.append_rows(chunk->values);
  }
  keys.append_rows(open_keys_);
  values.append_rows(open_values_);
  return {std::move(keys), std::move(values)};
}

KVCache::KVCache(int layers, int heads, std::size_t head_dim, CacheConfig config)
    : layers_(layers), heads_(heads), config_(std::move(config)) {
  if (layers_ <= 0 || heads_ <= 0) throw Error(Errc::InvalidConfig, "layers and heads must be positive");
  streams_.reserve(static_cast<std::size_t>(layers_ * heads_));
  for (int l = 0; l < layers_; ++l) {
    for (int h = 0; h < heads_; ++h) streams_.emplace_back(l, h, head_dim, config_);
  }
}

StreamCache& KVCache::stream(int layer, int head) {
  if (layer < 0 || layer >= layers_ || head < 0 || head >= heads_) {
    throw Error(Errc::DimMismatch, "stream index out of range");
  }
  return streams_[static_cast<std::size_t>(layer * heads_ + head)];
}

const StreamCache& KVCache::stream(int layer, int head) const {
  return const_cast<KVCache*>(this)->stream(layer, head);
}

std::size_t KVCache::append(int layer, int head, const DenseMatrix& keys,
                            const DenseMatrix& values) {
  return stream(layer, head).append(keys, values);
}

CacheView KVCache::snapshot(int layer, int head) const { return stream(layer, head).snapshot(); }

}  // namespace actkv
