// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "actkv/error.hpp"
#include "actkv/trace.hpp"

namespace actkv {

namespace {

struct ChunkPlan {
  int group = 0;
  double signal = 0.0;
};

TraceHeader header_of(const SyntheticConfig& config, bool with_truth) {
  TraceHeader h;
  h.d = config.d;
  h.layers = config.layers;
  h.heads = config.heads;
  h.window = config.window;
  h.num_windows = config.num_windows;
  h.num_decode_steps = config.num_decode_steps;
  h.task_tokens = config.task_tokens;
  h.has_ground_truth = with_truth;
  return h;
}

// First token position of the hot local tail once `total` pairs are cached.
std::int64_t local_first(const SyntheticConfig& c, std::int64_t total) {
  const auto sinks = static_cast<std::int64_t>(c.n_sink);
  if (total <= sinks) return total;
  return std::max(sinks, total - static_cast<std::int64_t>(c.n_local));
}

bool retrievable_at(const SyntheticConfig& c, std::int64_t chunk_id, std::int64_t total) {
  if (chunk_id < 0) return false;
  const auto cs = static_cast<std::int64_t>(c.chunk_size);
  const std::int64_t last = static_cast<std::int64_t>(c.n_sink) + (chunk_id + 1) * cs - 1;
  return last < total && last < local_first(c, total);
}

std::vector<std::int64_t> eligible_chunks(const SyntheticConfig& c, std::int64_t total,
                                          const std::set<std::int64_t>& used) {
  std::vector<std::int64_t> out;
  for (std::int64_t id = 0; retrievable_at(c, id, total); ++id) {
    if (!used.count(id)) out.push_back(id);
  }
  return out;
}

std::vector<float> unit_direction(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> raw(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : raw) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] / norm);
  return out;
}

}  // namespace

std::int64_t pairs_before(const SyntheticConfig& config, Stage stage, std::int64_t index) {
  const std::int64_t window_pairs = static_cast<std::int64_t>(config.window) * index;
  if (stage == Stage::Prefill) return window_pairs;
  return static_cast<std::int64_t>(config.window) * config.num_windows + index;
}

PlantedSpec default_planted_spec(const SyntheticConfig& config) {
  PlantedSpec spec;
  if (config.planted_per_target == 0) return spec;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::set<std::int64_t> used;
  int group = 0;
  auto pick = [&](std::vector<std::int64_t> pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(pool.size(), config.planted_per_target));
    std::sort(pool.begin(), pool.end());
    used.insert(pool.begin(), pool.end());
    return pool;
  };

  for (std::uint32_t t = 0; t < config.num_windows; ++t) {
    auto pool = eligible_chunks(config, pairs_before(config, Stage::Prefill, t), used);
    if (pool.size() < config.planted_per_target) continue;
    spec.targets.push_back({Stage::Prefill, t, ++group, config.signal, pick(std::move(pool))});
  }
  if (config.num_decode_steps > 0) {
    auto pool = eligible_chunks(config, pairs_before(config, Stage::Decode, 0), used);
    if (!pool.empty()) {
      const auto ids = pick(std::move(pool));
      ++group;
      for (std::uint32_t i = 0; i < config.num_decode_steps; ++i) {
        spec.targets.push_back({Stage::Decode, i, group, config.signal, ids});
      }
    }
  }
  return spec;
}

void validate_planted_spec(const SyntheticConfig& config, const PlantedSpec& spec) {
  std::map<std::int64_t, ChunkPlan> owner;
  std::set<std::pair<int, std::int64_t>> seen_steps;
  for (const auto& target : spec.targets) {
    if (!(target.signal >= 0.0 && target.signal <= 1.0)) {
      throw Error(Errc::SpecOutOfRange, "signal " + std::to_string(target.signal) + " outside [0, 1]");
    }
    const std::int64_t limit =
        target.stage == Stage::Prefill ? config.num_windows : config.num_decode_steps;
    if (target.index < 0 || target.index >= limit) {
      throw Error(Errc::SpecOutOfRange, std::string(to_string(target.stage)) + " step " +
                                            std::to_string(target.index) + " does not exist");
    }
    if (!seen_steps.insert({static_cast<int>(target.stage), target.index}).second) {
      throw Error(Errc::SpecOutOfRange, "two targets for the same step");
    }
    const std::int64_t total = pairs_before(config, target.stage, target.index);
    for (std::int64_t id : target.chunk_ids) {
      if (!retrievable_at(config, id, total)) {
        throw Error(Errc::SpecOutOfRange, "chunk " + std::to_string(id) + " is not retrievable at " +
                                              std::string(to_string(target.stage)) + " step " +
                                              std::to_string(target.index));
      }
      auto [it, inserted] = owner.emplace(id, ChunkPlan{target.group, target.signal});
      if (!inserted && (it->second.group != target.group || it->second.signal != target.signal)) {
        throw Error(Errc::SpecOutOfRange, "chunk " + std::to_string(id) + " planted by two groups");
      }
    }
  }
  if (!(config.anchor_fraction >= 0.0 && config.anchor_fraction <= 1.0) || config.anchor_scale < 0.0 ||
      config.query_offset < 0.0) {
    throw Error(Errc::SpecOutOfRange, "anchor fraction, anchor scale or query offset out of range");
  }
}

void generate_synthetic(const std::filesystem::path& path, const SyntheticConfig& config,
                        const PlantedSpec& spec) {
  validate_planted_spec(config, spec);
  const TraceHeader header = header_of(config, true);
  header.validate();
  if (config.chunk_size == 0) throw Error(Errc::SpecOutOfRange, "chunk size must be positive");

  const std::size_t dh = header.head_dim();
  const std::size_t streams = std::size_t{config.layers} * config.heads;
  const double scale = std::sqrt(static_cast<double>(dh));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;

  std::map<std::int64_t, ChunkPlan> chunk_plan;
  std::map<std::pair<int, std::int64_t>, const PlantedTarget*> step_target;
  std::set<int> groups;
  for (const auto& target : spec.targets) {
    groups.insert(target.group);
    step_target[{static_cast<int>(target.stage), target.index}] = &target;
    for (std::int64_t id : target.chunk_ids) chunk_plan[id] = {target.group, target.signal};
  }

  // Per (group, stream) unit directions and per-stream query offsets.
  std::map<int, std::vector<std::vector<float>>> directions;
  for (int g : groups) {
    auto& dirs = directions[g];
    for (std::size_t s = 0; s < streams; ++s) dirs.push_back(unit_direction(rng, dh));
  }
  std::vector<std::vector<float>> offsets(streams, std::vector<float>(dh, 0.0f));
  if (config.query_offset > 0.0) {
    for (auto& off : offsets) {
      const auto dir = unit_direction(rng, dh);
      for (std::size_t i = 0; i < dh; ++i) off[i] = static_cast<float>(config.query_offset * scale * dir[i]);
    }
  }

  const auto fill_noise = [&](std::span<float> row, std::span<const float> offset) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = static_cast<float>(normal(rng)) + (offset.empty() ? 0.0f : offset[i]);
    }
  };

  TraceWriter writer(path, header);
  if (config.task_tokens > 0) {
    std::vector<DenseMatrix> task;
    for (std::size_t s = 0; s < streams; ++s) {
      DenseMatrix q(config.task_tokens, dh);
      for (std::size_t r = 0; r < q.rows(); ++r) fill_noise(q.row(r), offsets[s]);
      task.push_back(std::move(q));
    }
    writer.write_task(task);
  }

  const std::uint32_t total_steps = config.num_windows + config.num_decode_steps;
  for (std::uint32_t n = 0; n < total_steps; ++n) {
    StepTensors step;
    const bool prefill = n < config.num_windows;
    step.stage = prefill ? Stage::Prefill : Stage::Decode;
    step.index = prefill ? n : n - config.num_windows;
    step.tokens = prefill ? config.window : 1;
    step.layers = static_cast<int>(config.layers);
    step.heads = static_cast<int>(config.heads);
    step.qkv.resize(streams);
    const std::int64_t first_pos = pairs_before(config, step.stage, step.index);

    const PlantedTarget* target = nullptr;
    if (auto it = step_target.find({static_cast<int>(step.stage), step.index}); it != step_target.end()) {
      target = it->second;
    }

    // Anchor rows are shared by all streams of a window.
    std::vector<bool> anchor(step.tokens, false);
    if (target && prefill && config.anchor_fraction > 0.0) {
      const auto count = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(config.anchor_fraction * step.tokens)), 1, step.tokens);
      std::vector<std::size_t> rows(step.tokens);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      std::shuffle(rows.begin(), rows.end(), rng);
      for (std::size_t i = 0; i < count; ++i) anchor[rows[i]] = true;
    }

    for (std::size_t s = 0; s < streams; ++s) {
      HeadQKV& blk = step.qkv[s];
      blk.q = DenseMatrix(step.tokens, dh);
      blk.k = DenseMatrix(step.tokens, dh);
      blk.v = DenseMatrix(step.tokens, dh);
      const std::vector<float>* dir = target ? &directions[target->group][s] : nullptr;
      for (std::size_t r = 0; r < step.tokens; ++r) {
        auto q = blk.q.row(r);
        if (dir && prefill && anchor[r]) {
          for (std::size_t i = 0; i < dh; ++i) q[i] = static_cast<float>(config.anchor_scale * scale * (*dir)[i]);
        } else if (dir && !prefill) {
          fill_noise(q, {});
          for (std::size_t i = 0; i < dh; ++i) q[i] += static_cast<float>(config.anchor_scale * scale * (*dir)[i]);
        } else {
          fill_noise(q, offsets[s]);
        }

        auto k = blk.k.row(r);
        fill_noise(k, {});
        const std::int64_t pos = first_pos + static_cast<std::int64_t>(r);
        if (pos >= static_cast<std::int64_t>(config.n_sink)) {
          const std::int64_t id = (pos - static_cast<std::int64_t>(config.n_sink)) /
                                  static_cast<std::int64_t>(config.chunk_size);
          if (auto it = chunk_plan.find(id); it != chunk_plan.end()) {
            const auto& u = directions[it->second.group][s];
            const double sig = it->second.signal;
            for (std::size_t i = 0; i < dh; ++i) {
              k[i] = static_cast<float>(sig * scale * u[i] + (1.0 - sig) * k[i]);
            }
          }
        }
        fill_noise(blk.v.row(r), {});
      }
    }
    writer.write_step(step);
  }

  GroundTruth truth;
  truth.n_sink = config.n_sink;
  truth.chunk_size = config.chunk_size;
  truth.n_local = config.n_local;
  for (const auto& target : spec.targets) {
    TruthEntry entry;
    entry.stage = target.stage;
    entry.index = target.index;
    entry.signal = target.signal;
    entry.per_layer.assign(config.layers, target.chunk_ids);
    truth.entries.push_back(std::move(entry));
  }
  std::sort(truth.entries.begin(), truth.entries.end(), [](const TruthEntry& a, const TruthEntry& b) {
    if (a.stage != b.stage) return a.stage == Stage::Prefill;
    return a.index < b.index;
  });
  writer.finish(truth);
}

}  // namespace actkv
