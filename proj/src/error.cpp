// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/error.hpp"

namespace actkv {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::StatsUndefined: return "StatsUndefined";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::UnknownChunk: return "UnknownChunk";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::Malformed: return "Malformed";
    case Errc::SpecOutOfRange: return "SpecOutOfRange";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace actkv
