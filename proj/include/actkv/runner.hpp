// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "actkv/engine.hpp"
#include "actkv/trace.hpp"

namespace actkv {

// Engine config with the trace's shapes and `base`'s policy settings.
EngineConfig config_for_trace(const TraceHeader& header, EngineConfig base);

// Replays every window and decode step of a trace through a fresh engine.
// `sink` sees each record as it is produced.
std::vector<StepRecord> run_trace(const TraceReader& reader, const EngineConfig& config,
                                  const std::function<void(const StepRecord&)>& sink = {});

nlohmann::json step_record_to_json(const StepRecord& record);
StepRecord step_record_from_json(const nlohmann::json& j);

}  // namespace actkv
