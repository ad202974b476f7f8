// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actkv/error.hpp"

namespace actkv {

std::string_view to_string(CutoffMode mode) { return mode == CutoffMode::Dynamic ? "dynamic" : "fixed"; }

CutoffMode cutoff_mode_from_string(std::string_view name) {
  if (name == "dynamic") return CutoffMode::Dynamic;
  if (name == "fixed") return CutoffMode::Fixed;
  throw Error(Errc::InvalidConfig, "unknown cutoff mode '" + std::string(name) + "'");
}

void EngineConfig::validate() const {
  if (d == 0 || layers <= 0 || heads <= 0 || window == 0 || chunk_size == 0) {
    throw Error(Errc::InvalidConfig, "dimensions, layers, heads, window and chunk size must be positive");
  }
  if (d % static_cast<std::size_t>(heads) != 0) {
    throw Error(Errc::InvalidConfig, "d=" + std::to_string(d) + " is not divisible by " +
                                         std::to_string(heads) + " heads");
  }
  if (budget % chunk_size != 0) {
    throw Error(Errc::InvalidConfig, "budget " + std::to_string(budget) +
                                         " is not a multiple of chunk size " + std::to_string(chunk_size));
  }
}

namespace {

CacheConfig cache_config(const EngineConfig& config) {
  CacheConfig cc;
  cc.n_sink = config.n_sink;
  cc.chunk_size = config.chunk_size;
  cc.n_local = config.n_local;
  return cc;
}

const EngineConfig& validated(const EngineConfig& config) {
  config.validate();
  return config;
}

}  // namespace

Engine::Engine(EngineConfig config)
    : config_(validated(config)),
      cache_(config_.layers, config_.heads, config_.head_dim(), cache_config(config_)),
      stats_(static_cast<std::size_t>(config_.layers * config_.heads),
             StreamingStats(config_.head_dim())) {}

void Engine::set_task_queries(std::vector<DenseMatrix> queries) {
  if (!queries.empty() && queries.size() != stats_.size()) {
    throw Error(Errc::ShapeMismatch, "task queries must cover every (layer, head)");
  }
  for (const auto& q : queries) {
    if (q.rows() > 0 && q.cols() != config_.head_dim()) {
      throw Error(Errc::ShapeMismatch, "task query width differs from head dimension");
    }
  }
  task_queries_ = std::move(queries);
}

const StreamingStats& Engine::stats(int layer, int head) const {
  return stats_.at(static_cast<std::size_t>(layer * config_.heads + head));
}

void Engine::check_shape(const StepTensors& t, std::size_t tokens) const {
  if (t.layers != config_.layers || t.heads != config_.heads ||
      t.qkv.size() != static_cast<std::size_t>(config_.layers * config_.heads) || t.tokens != tokens) {
    throw Error(Errc::ShapeMismatch, "expected (" + std::to_string(config_.layers) + ", " +
                                         std::to_string(config_.heads) + ", " + std::to_string(tokens) +
                                         ", d) tensors, got tokens=" + std::to_string(t.tokens));
  }
  const std::size_t dh = config_.head_dim();
  for (const auto& h : t.qkv) {
    for (const DenseMatrix* m : {&h.q, &h.k, &h.v}) {
      if (m->rows() != tokens || m->cols() != dh) {
        throw Error(Errc::ShapeMismatch, "block is " + std::to_string(m->rows()) + "x" +
                                             std::to_string(m->cols()) + ", expected " +
                                             std::to_string(tokens) + "x" + std::to_string(dh));
      }
    }
  }
}

ProbeQuery Engine::window_probe(int layer, int head, const DenseMatrix& queries) {
  auto& stats = stats_[static_cast<std::size_t>(layer * config_.heads + head)];
  stats.update(queries);

  const DenseMatrix* task = nullptr;
  if (!task_queries_.empty()) task = &task_queries_[static_cast<std::size_t>(layer * config_.heads + head)];
  DenseMatrix extended;
  const DenseMatrix* probe_input = &queries;
  if (task && task->rows() > 0) {
    extended = queries;
    extended.append_rows(*task);
    probe_input = &extended;
  }

  ActivationBias bias;
  if (config_.probe_mode == ProbeMode::Mean || stats.count() < 2) {
    bias = uniform_bias(probe_input->rows());
  } else {
    bias = activation_bias(*probe_input, stats);
  }
  ProbeQuery probe = build_probe(*probe_input, bias);
  probe.layer = layer;
  probe.head = head;
  return probe;
}

void Engine::attend_layer(int layer, const StepTensors& t, std::span<const CacheView> views,
                          const SelectionResult& selection, LayerRecord& record) {
  const std::size_t dh = config_.head_dim();
  DenseMatrix output(t.tokens, config_.d);
  record.pairs_used = selection.pairs_used;
  for (int h = 0; h < config_.heads; ++h) {
    const CacheView& view = views[static_cast<std::size_t>(h)];
    const auto& cur = t.at(layer, h);
    const Materialized retrieved = materialize(selection, view);
    const DenseMatrix* key_parts[] = {&view.sink_keys, &retrieved.keys, &view.local_keys, &cur.k};
    const DenseMatrix* value_parts[] = {&view.sink_values, &retrieved.values, &view.local_values, &cur.v};
    const DenseMatrix keys = vstack(key_parts);
    const DenseMatrix values = vstack(value_parts);
    record.attended_pairs = view.sink_keys.rows() + retrieved.keys.rows() + view.local_keys.rows();

    auto result = attend(cur.q, keys, values, /*causal=*/true);
    record.max_weight_error = std::max(record.max_weight_error, result.max_row_error);
    const DenseMatrix& head_out = result.output;
    for (std::size_t i = 0; i < head_out.rows(); ++i) {
      std::copy_n(head_out.row(i).begin(), dh, output.row(i).begin() + static_cast<std::ptrdiff_t>(h * dh));
    }
  }
  double checksum = 0.0;
  for (float x : output.data()) checksum += x;
  record.checksum = checksum;
  last_outputs_[static_cast<std::size_t>(layer)] = std::move(output);
}

void Engine::append_step(const StepTensors& t) {
  for (int l = 0; l < config_.layers; ++l) {
    for (int h = 0; h < config_.heads; ++h) {
      const auto& blk = t.at(l, h);
      cache_.append(l, h, blk.k, blk.v);
    }
  }
}

namespace {

std::vector<CacheView> layer_views(const KVCache& cache, int layer) {
  std::vector<CacheView> views;
  views.reserve(static_cast<std::size_t>(cache.heads()));
  for (int h = 0; h < cache.heads(); ++h) views.push_back(cache.snapshot(layer, h));
  return views;
}

void fill_scores(LayerRecord& record, const std::vector<ScoredChunk>& scored) {
  record.chunk_ids.clear();
  record.scores.clear();
  for (const auto& s : scored) {
    record.chunk_ids.push_back(s.chunk_id);
    record.scores.push_back(s.score);
  }
  record.theta = layer_density(record.scores);
}

}  // namespace

StepRecord Engine::prefill_step(const StepTensors& window) {
  check_shape(window, config_.window);
  StepRecord record;
  record.step = step_;
  record.stage = Stage::Prefill;
  record.index = window.index;
  record.layers.resize(static_cast<std::size_t>(config_.layers));
  last_outputs_.assign(static_cast<std::size_t>(config_.layers), DenseMatrix());

  for (int l = 0; l < config_.layers; ++l) {
    LayerRecord& lr = record.layers[static_cast<std::size_t>(l)];
    lr.layer = l;
    const auto views = layer_views(cache_, l);
    std::vector<DenseVector> probes;
    for (int h = 0; h < config_.heads; ++h) {
      probes.push_back(window_probe(l, h, window.at(l, h).q).vector);
      const auto& v = probes.back().data();
      lr.probe.insert(lr.probe.end(), v.begin(), v.end());
    }
    const auto scored = score_chunks(probes, views, config_.rep_mode);
    fill_scores(lr, scored);
    lr.budget = static_cast<std::int64_t>(config_.budget);
    const auto selection = select_topk(scored, config_.budget, config_.chunk_size);
    lr.selected = selection.selected;
    attend_layer(l, window, views, selection, lr);
  }
  append_step(window);
  ++step_;
  return record;
}

StepRecord Engine::decode_step(const StepTensors& token) {
  check_shape(token, 1);
  StepRecord record;
  record.step = step_;
  record.stage = Stage::Decode;
  record.index = token.index;
  record.layers.resize(static_cast<std::size_t>(config_.layers));
  last_outputs_.assign(static_cast<std::size_t>(config_.layers), DenseMatrix());

  // Every layer's density is needed before the first budget is known.
  std::vector<std::vector<CacheView>> views(static_cast<std::size_t>(config_.layers));
  std::vector<std::vector<ScoredChunk>> scored(static_cast<std::size_t>(config_.layers));
  DensityProfile profile;
  for (int l = 0; l < config_.layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    LayerRecord& lr = record.layers[li];
    lr.layer = l;
    views[li] = layer_views(cache_, l);
    std::vector<DenseVector> probes;
    for (int h = 0; h < config_.heads; ++h) {
      probes.push_back(decoding_probe(token.at(l, h).q.row(0)).vector);
      const auto& v = probes.back().data();
      lr.probe.insert(lr.probe.end(), v.begin(), v.end());
    }
    scored[li] = score_chunks(probes, views[li], config_.rep_mode);
    fill_scores(lr, scored[li]);
    profile.theta.push_back(lr.theta);
    profile.n_per_layer.push_back(scored[li].size());
  }

  std::vector<std::int64_t> budgets(static_cast<std::size_t>(config_.layers),
                                    static_cast<std::int64_t>(config_.budget));
  if (config_.cutoff_mode == CutoffMode::Dynamic) {
    const auto total = static_cast<std::int64_t>(config_.budget) * config_.layers;
    budgets = allocate(profile, total, static_cast<std::int64_t>(config_.chunk_size)).budgets;
  }

  for (int l = 0; l < config_.layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    LayerRecord& lr = record.layers[li];
    lr.budget = budgets[li];
    const auto selection =
        recall_layer(scored[li], static_cast<std::size_t>(budgets[li]), config_.chunk_size);
    lr.selected = selection.selected;
    attend_layer(l, token, views[li], selection, lr);
  }
  append_step(token);
  ++step_;
  return record;
}

}  // namespace actkv
