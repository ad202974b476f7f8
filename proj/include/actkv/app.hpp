// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "actkv/engine.hpp"
#include "actkv/trace.hpp"

namespace actkv::app {

inline constexpr const char* kVersion = "0.1.0";

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFormatError = 2,
  kConfigError = 3,
  kMismatch = 4,
};

struct GenTraceOptions {
  SyntheticConfig config;
  std::filesystem::path out;
};

struct RunOptions {
  std::filesystem::path trace;
  EngineConfig engine;  // shapes come from the trace
  std::optional<std::filesystem::path> records;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> manifest;
  std::string command_line;
};

struct CompareOptions {
  std::vector<std::filesystem::path> a;
  std::vector<std::filesystem::path> b;
  std::optional<std::filesystem::path> out;
};

int gen_trace(const GenTraceOptions& options, std::ostream& out, std::ostream& err);
int run(const RunOptions& options, std::ostream& out, std::ostream& err);
int compare(const CompareOptions& options, std::ostream& out, std::ostream& err);

// Lower-case hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace actkv::app
