// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "actkv/linalg.hpp"

namespace actkv {

enum class RepMode { Mean, MaxScore };

std::string_view to_string(RepMode mode);
RepMode rep_mode_from_string(std::string_view name);

struct TokenSpan {
  std::int64_t first = 0;  // inclusive
  std::int64_t last = 0;   // inclusive

  std::int64_t length() const noexcept { return last - first + 1; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct KVChunk {
  std::int64_t chunk_id = 0;
  int layer = 0;
  int head = 0;
  TokenSpan span;
  DenseMatrix keys;
  DenseMatrix values;
  DenseVector rep_key;

  std::size_t size() const noexcept { return keys.rows(); }
};

// Representative key of a chunk. Both modes store the per-dimension mean; the
// max-score reduction happens at scoring time.
DenseVector rep_key_of(const DenseMatrix& keys, RepMode mode = RepMode::Mean);

struct CacheConfig {
  std::size_t n_sink = 64;
  std::size_t chunk_size = 32;
  std::size_t n_local = 512;
  // When set, sealed chunks are also written to one spill file per
  // (layer, head) in this directory.
  std::optional<std::filesystem::path> spill_dir;
};

// Immutable view of one (layer, head) stream. Sealed chunks are shared with
// the live cache; everything else is copied.
struct CacheView {
  std::size_t dim = 0;
  std::size_t chunk_size = 0;
  std::int64_t total_pairs = 0;
  DenseMatrix sink_keys;
  DenseMatrix sink_values;
  std::vector<std::shared_ptr<const KVChunk>> chunks;  // sealed, by id
  std::shared_ptr<const KVChunk> open_chunk;            // partial, may be null
  DenseMatrix local_keys;
  DenseMatrix local_values;
  std::int64_t local_first = 0;  // token position of local_keys row 0

  std::size_t num_sealed() const noexcept { return chunks.size(); }

  // Chunks (sealed or the trailing partial one) whose whole span lies before
  // the local tail. These are the candidates for retrieval.
  std::vector<std::shared_ptr<const KVChunk>> retrievable() const;

  // Looks up a sealed or open chunk; null when unknown.
  const KVChunk* find(std::int64_t chunk_id) const;
};

// Sinks, chunked cold tier, open chunk and hot local tail for one stream.
class StreamCache {
 public:
  StreamCache(int layer, int head, std::size_t dim, const CacheConfig& config);

  // Routes pairs to sinks, then the open chunk; returns chunks sealed.
  std::size_t append(const DenseMatrix& keys, const DenseMatrix& values);

  CacheView snapshot() const;

  std::int64_t total_pairs() const noexcept { return total_; }
  std::size_t num_sinks() const noexcept { return sink_keys_.rows(); }
  std::size_t num_sealed() const noexcept { return chunks_.size(); }
  std::size_t open_rows() const noexcept { return open_keys_.rows(); }
  std::size_t local_rows() const noexcept { return local_count_; }
  std::size_t dim() const noexcept { return dim_; }

  // Every stored pair in token order, for full-cache reference attention.
  std::pair<DenseMatrix, DenseMatrix> all_pairs() const;

 private:
  void seal();
  void push_local(std::span<const float> key, std::span<const float> value);

  int layer_;
  int head_;
  std::size_t dim_;
  CacheConfig config_;
  std::int64_t total_ = 0;
  DenseMatrix sink_keys_;
  DenseMatrix sink_values_;
  std::vector<std::shared_ptr<const KVChunk>> chunks_;
  DenseMatrix open_keys_;
  DenseMatrix open_values_;
  std::int64_t open_first_ = 0;
  // Ring buffer of the newest n_local non-sink pairs.
  std::vector<float> local_keys_;
  std::vector<float> local_values_;
  std::size_t local_head_ = 0;
  std::size_t local_count_ = 0;
  std::optional<std::filesystem::path> spill_path_;
};

// All (layer, head) streams of a model.
class KVCache {
 public:
  KVCache(int layers, int heads, std::size_t head_dim, CacheConfig config);

  std::size_t append(int layer, int head, const DenseMatrix& keys, const DenseMatrix& values);
  CacheView snapshot(int layer, int head) const;

  StreamCache& stream(int layer, int head);
  const StreamCache& stream(int layer, int head) const;

  int layers() const noexcept { return layers_; }
  int heads() const noexcept { return heads_; }
  const CacheConfig& config() const noexcept { return config_; }

 private:
  int layers_;
  int heads_;
  CacheConfig config_;
  std::vector<StreamCache> streams_;
};

// Spill file: 32-byte header {"AKVC", version u32, c u32, d u32, 16 reserved
// bytes}, then per chunk the c x d key block and the c x d value block as
// little-endian float32.
inline constexpr std::uint32_t kSpillVersion = 1;

struct SpilledChunk {
  DenseMatrix keys;
  DenseMatrix values;
};

void write_spill_header(std::ostream& out, std::uint32_t chunk_size, std::uint32_t dim);
void append_spill_chunk(std::ostream& out, const DenseMatrix& keys, const DenseMatrix& values);
void write_spill(const std::filesystem::path& path, std::uint32_t chunk_size, std::uint32_t dim,
                 std::span<const SpilledChunk> chunks);
std::vector<SpilledChunk> read_spill(const std::filesystem::path& path);

}  // namespace actkv
