// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actkv {

enum class Errc {
  ZeroNorm,
  EmptyInput,
  NotNormalized,
  DimMismatch,
  StatsUndefined,
  LengthMismatch,
  UnknownChunk,
  ShapeMismatch,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  Malformed,
  SpecOutOfRange,
  ConfigMismatch,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace actkv
