// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/runner.hpp"

#include <string>

#include "actkv/error.hpp"

namespace actkv {

using nlohmann::json;

EngineConfig config_for_trace(const TraceHeader& header, EngineConfig base) {
  base.d = header.d;
  base.layers = static_cast<int>(header.layers);
  base.heads = static_cast<int>(header.heads);
  base.window = header.window;
  return base;
}

std::vector<StepRecord> run_trace(const TraceReader& reader, const EngineConfig& config,
                                  const std::function<void(const StepRecord&)>& sink) {
  Engine engine(config);
  if (reader.header().has_task_block()) engine.set_task_queries(reader.task_queries());
  std::vector<StepRecord> records;
  auto cursor = reader.cursor();
  StepTensors step;
  while (cursor.next(step)) {
    StepRecord record = step.stage == Stage::Prefill ? engine.prefill_step(step) : engine.decode_step(step);
    if (sink) sink(record);
    records.push_back(std::move(record));
  }
  return records;
}

json step_record_to_json(const StepRecord& record) {
  json layers = json::array();
  for (const auto& l : record.layers) {
    layers.push_back({{"layer", l.layer},
                      {"probe", l.probe},
                      {"chunk_ids", l.chunk_ids},
                      {"scores", l.scores},
                      {"theta", l.theta},
                      {"budget", l.budget},
                      {"selected", l.selected},
                      {"pairs_used", l.pairs_used},
                      {"attended_pairs", l.attended_pairs},
                      {"checksum", l.checksum},
                      {"max_weight_error", l.max_weight_error}});
  }
  return json{{"step", record.step},
              {"stage", std::string(to_string(record.stage))},
              {"index", record.index},
              {"layers", std::move(layers)}};
}

StepRecord step_record_from_json(const json& j) {
  try {
    StepRecord r;
    r.step = j.at("step").get<std::int64_t>();
    r.stage = j.at("stage").get<std::string>() == "prefill" ? Stage::Prefill : Stage::Decode;
    r.index = j.at("index").get<std::int64_t>();
    for (const auto& l : j.at("layers")) {
      LayerRecord lr;
      lr.layer = l.at("layer").get<int>();
      lr.probe = l.at("probe").get<std::vector<float>>();
      lr.chunk_ids = l.at("chunk_ids").get<std::vector<std::int64_t>>();
      lr.scores = l.at("scores").get<std::vector<double>>();
      lr.theta = l.at("theta").get<double>();
      lr.budget = l.at("budget").get<std::int64_t>();
      lr.selected = l.at("selected").get<std::vector<std::int64_t>>();
      lr.pairs_used = l.at("pairs_used").get<std::size_t>();
      lr.attended_pairs = l.at("attended_pairs").get<std::size_t>();
      lr.checksum = l.at("checksum").get<double>();
      lr.max_weight_error = l.at("max_weight_error").get<double>();
      r.layers.push_back(std::move(lr));
    }
    return r;
  } catch (const json::exception& ex) {
    throw Error(Errc::Malformed, std::string("step record: ") + ex.what());
  }
}

}  // namespace actkv
