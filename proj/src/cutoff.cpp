// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "actkv/error.hpp"
#include "actkv/linalg.hpp"

namespace actkv {

double layer_density(std::span<const double> scores) {
  if (scores.empty()) return 0.0;
  return entropy(softmax(scores));
}

std::vector<double> allocate_real(std::span<const double> theta, double initial_total) {
  const std::size_t layers = theta.size();
  std::vector<double> budgets(layers, 0.0);
  // suffix[l] = sum of theta over layers after l.
  std::vector<double> suffix(layers + 1, 0.0);
  for (std::size_t l = layers; l-- > 0;) suffix[l] = suffix[l + 1] + theta[l];

  double remaining = initial_total;
  for (std::size_t l = 0; l < layers; ++l) {
    if (l + 1 == layers) {
      budgets[l] = remaining;
      break;
    }
    const std::size_t rest = layers - l - 1;
    // rest * mean(theta[l+1..]) is the plain suffix sum.
    const double later = static_cast<double>(rest) * (suffix[l + 1] / static_cast<double>(rest));
    const double denom = theta[l] + later;
    const double share = denom > 0.0 ? theta[l] / denom : 0.0;
    budgets[l] = share * remaining;
    remaining -= budgets[l];
  }
  return budgets;
}

std::vector<std::int64_t> apportion(std::span<const double> quotas, std::int64_t total_units) {
  std::vector<std::int64_t> out(quotas.size(), 0);
  std::int64_t assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  remainders.reserve(quotas.size());
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    const double q = std::max(quotas[i], 0.0);
    out[i] = static_cast<std::int64_t>(std::floor(q));
    assigned += out[i];
    remainders.emplace_back(q - std::floor(q), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::int64_t left = total_units - assigned;
  // Quotas that sum to total_units leave 0 <= left <= size; the loops only
  // guard against floating-point drift in the caller's quotas.
  for (std::size_t i = 0; left > 0 && !remainders.empty(); i = (i + 1) % remainders.size()) {
    ++out[remainders[i].second];
    --left;
  }
  while (left < 0) {
    auto it = std::find_if(remainders.rbegin(), remainders.rend(),
                           [&](const auto& r) { return out[r.second] > 0; });
    if (it == remainders.rend()) break;
    --out[it->second];
    ++left;
  }
  return out;
}

BudgetAllocation allocate(const DensityProfile& profile, std::int64_t initial_total,
                          std::int64_t unit) {
  const auto& theta = profile.theta;
  if (theta.empty()) throw Error(Errc::InvalidConfig, "allocate needs at least one layer");
  if (initial_total < 0) throw Error(Errc::InvalidConfig, "negative total budget");
  if (unit <= 0 || initial_total % unit != 0) {
    throw Error(Errc::InvalidConfig, "total budget " + std::to_string(initial_total) +
                                         " is not a multiple of " + std::to_string(unit));
  }
  for (double t : theta) {
    if (!(t >= 0.0)) throw Error(Errc::InvalidConfig, "densities must be non-negative");
  }

  BudgetAllocation result;
  result.initial_total = initial_total;
  const double total = static_cast<double>(initial_total);
  if (std::all_of(theta.begin(), theta.end(), [](double t) { return t == 0.0; })) {
    result.equal_split = true;
    result.real_budgets.assign(theta.size(), total / static_cast<double>(theta.size()));
  } else {
    result.real_budgets = allocate_real(theta, total);
  }

  std::vector<double> quotas(theta.size());
  for (std::size_t l = 0; l < theta.size(); ++l) {
    quotas[l] = result.real_budgets[l] / static_cast<double>(unit);
  }
  const auto units = apportion(quotas, initial_total / unit);
  result.budgets.resize(theta.size());
  for (std::size_t l = 0; l < theta.size(); ++l) result.budgets[l] = units[l] * unit;
  return result;
}

SelectionResult recall_layer(std::span<const ScoredChunk> scores, std::size_t budget_pairs,
                             std::size_t chunk_size) {
  return select_topk(scores, budget_pairs, chunk_size);
}

}  // namespace actkv
