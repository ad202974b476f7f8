// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "actkv/retrieval.hpp"

namespace actkv {

// entropy(softmax(scores)); 0 for an empty layer.
double layer_density(std::span<const double> scores);

struct DensityProfile {
  std::vector<double> theta;
  std::vector<std::size_t> n_per_layer;
};

struct BudgetAllocation {
  std::vector<std::int64_t> budgets;  // KV pairs per layer
  std::int64_t initial_total = 0;
  std::vector<double> real_budgets;   // before apportionment
  bool equal_split = false;           // all densities were zero
};

// Shallow-to-deep split of initial_total:
//   B_l = theta_l / (theta_l + sum_{j>l} theta_j) * remaining,
// remaining -= B_l, last layer takes the rest. Real budgets are converted to
// multiples of `unit` by largest remainder so the total is exact. Throws
// InvalidConfig when initial_total is negative, not a multiple of unit, or
// theta is empty or has negative entries.
BudgetAllocation allocate(const DensityProfile& profile, std::int64_t initial_total,
                          std::int64_t unit = 1);

// Real-valued recurrence only.
std::vector<double> allocate_real(std::span<const double> theta, double initial_total);

// Largest-remainder rounding of non-negative real quotas (in units) to
// integers summing to `total_units`. Ties go to the lower index.
std::vector<std::int64_t> apportion(std::span<const double> quotas, std::int64_t total_units);

SelectionResult recall_layer(std::span<const ScoredChunk> scores, std::size_t budget_pairs,
                             std::size_t chunk_size);

}  // namespace actkv
