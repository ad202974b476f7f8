// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "actkv/step.hpp"

namespace actkv {

// File layout:
//   [0, 32)  prefix: "AKVT", version u32, header_len u32, reserved u32,
//            footer_offset u64, footer_len u64 (all little-endian)
//   header   JSON, header_len bytes
//   payload  optional task block (per layer, per head: Q task_tokens x d_head),
//            then per window and per decode step: per layer, per head: Q, K, V
//            (tokens x d_head row-major float32 LE)
//   footer   ground-truth JSON at footer_offset, footer_len bytes (0 if absent)
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTracePrefixBytes = 32;

struct TraceHeader {
  std::uint32_t version = kTraceVersion;
  std::uint32_t d = 0;
  std::uint32_t layers = 0;
  std::uint32_t heads = 0;
  std::uint32_t window = 0;
  std::uint32_t num_windows = 0;
  std::uint32_t num_decode_steps = 0;
  std::string dtype = "f32le";
  std::uint32_t task_tokens = 0;
  bool has_ground_truth = false;

  bool has_task_block() const noexcept { return task_tokens > 0; }
  std::uint32_t head_dim() const noexcept { return heads ? d / heads : 0; }
  std::uint64_t task_bytes() const noexcept;
  std::uint64_t window_bytes() const noexcept;
  std::uint64_t decode_step_bytes() const noexcept;
  std::uint64_t payload_bytes() const noexcept;

  // Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TruthEntry {
  Stage stage = Stage::Decode;
  std::int64_t index = 0;
  double signal = 0.0;
  std::vector<std::vector<std::int64_t>> per_layer;  // relevant chunk ids

  friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};

// Planted relevance. Chunk ids are only meaningful for the chunk geometry
// they were planted with.
struct GroundTruth {
  std::size_t n_sink = 0;
  std::size_t chunk_size = 0;
  std::size_t n_local = 0;
  std::vector<TruthEntry> entries;

  const TruthEntry* find(Stage stage, std::int64_t index) const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);

class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, TraceHeader header);

  // Must precede the first step when header.task_tokens > 0.
  void write_task(std::span<const DenseMatrix> queries);
  void write_step(const StepTensors& step);
  // Writes the footer and patches the prefix. Throws ShapeMismatch when the
  // number of steps written disagrees with the header.
  void finish(const std::optional<GroundTruth>& truth = std::nullopt);

 private:
  void write_matrix(const DenseMatrix& m, std::size_t rows);

  std::filesystem::path path_;
  TraceHeader header_;
  std::ofstream out_;
  bool task_written_ = false;
  std::uint32_t windows_written_ = 0;
  std::uint32_t decodes_written_ = 0;
  bool finished_ = false;
};

// Sequential reader over one open file handle. Independent cursors over the
// same file may run concurrently.
class TraceCursor {
 public:
  TraceCursor(const std::filesystem::path& path, const TraceHeader& header,
              std::uint64_t payload_offset);

  // Next window or decode step; false after the last one.
  bool next(StepTensors& out);

 private:
  std::ifstream in_;
  TraceHeader header_;
  std::uint64_t offset_;
  std::uint32_t produced_ = 0;
};

class TraceReader {
 public:
  // Throws BadMagic, VersionUnsupported or TruncatedFile.
  explicit TraceReader(const std::filesystem::path& path);

  const TraceHeader& header() const noexcept { return header_; }
  const std::optional<GroundTruth>& ground_truth() const noexcept { return truth_; }
  std::uint64_t payload_offset() const noexcept { return payload_offset_; }

  // Task queries indexed layer * H + head; empty without a task block.
  std::vector<DenseMatrix> task_queries() const;
  TraceCursor cursor() const;

 private:
  std::filesystem::path path_;
  TraceHeader header_;
  std::uint64_t payload_offset_ = 0;
  std::optional<GroundTruth> truth_;
};

struct SyntheticConfig {
  std::uint32_t d = 64;
  std::uint32_t layers = 4;
  std::uint32_t heads = 1;
  std::uint32_t window = 256;
  std::uint32_t num_windows = 8;
  std::uint32_t num_decode_steps = 16;
  std::uint32_t task_tokens = 0;
  // Chunk geometry used to place planted chunks.
  std::size_t n_sink = 64;
  std::size_t chunk_size = 32;
  std::size_t n_local = 512;
  std::size_t planted_per_target = 4;
  double signal = 0.8;
  double anchor_fraction = 0.1;
  double anchor_scale = 3.0;
  // Norm of a per-(layer, head) offset added to background queries, in units
  // of the background scale sqrt(d_head). 0 keeps queries zero-mean.
  double query_offset = 0.0;
  std::uint64_t seed = 7;
};

// Chunks planted for one pre-filling window or decode step. Targets with the
// same group share a query direction and planted chunks.
struct PlantedTarget {
  Stage stage = Stage::Prefill;
  std::int64_t index = 0;
  int group = 0;
  double signal = 0.0;
  std::vector<std::int64_t> chunk_ids;
};

struct PlantedSpec {
  std::vector<PlantedTarget> targets;
};

// One disjoint target per pre-filling window that has retrievable chunks,
// plus one group shared by every decode step.
PlantedSpec default_planted_spec(const SyntheticConfig& config);

// Throws SpecOutOfRange for signals outside [0, 1], chunks that are not
// retrievable at their step, or chunks claimed by two groups.
void validate_planted_spec(const SyntheticConfig& config, const PlantedSpec& spec);

// Writes the trace and its ground truth. Pure function of the config and planted targets.
void generate_synthetic(const std::filesystem::path& path, const SyntheticConfig& config,
                        const PlantedSpec& spec);

// Pairs in the cache before the given step starts.
std::int64_t pairs_before(const SyntheticConfig& config, Stage stage, std::int64_t index);

}  // namespace actkv
