// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "actkv/linalg.hpp"
#include "actkv/probe.hpp"

namespace actkv {

struct HeadQKV {
  DenseMatrix q;
  DenseMatrix k;
  DenseMatrix v;
};

// Q/K/V of one pre-filling window or decoding step for every (layer, head),
// stored layer-major: heads[layer * H + head].
struct StepTensors {
  Stage stage = Stage::Prefill;
  std::int64_t index = 0;  // window or decode step number
  std::size_t tokens = 0;
  int layers = 0;
  int heads = 0;
  std::vector<HeadQKV> qkv;

  HeadQKV& at(int layer, int head) { return qkv[static_cast<std::size_t>(layer * heads + head)]; }
  const HeadQKV& at(int layer, int head) const {
    return qkv[static_cast<std::size_t>(layer * heads + head)];
  }
};

}  // namespace actkv
