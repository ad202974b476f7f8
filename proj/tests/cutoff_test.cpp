// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "actkv/cutoff.hpp"
#include "actkv/error.hpp"

using namespace actkv;

namespace {

std::int64_t sum(const std::vector<std::int64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

}  // namespace

TEST_CASE("layer density examples") {
  std::vector<double> four(4, 0.7);
  CHECK(layer_density(four) == doctest::Approx(std::log(4.0)));
  CHECK(layer_density(std::vector<double>{10, -10, -10}) < 1e-6);
  CHECK(std::abs(layer_density(std::vector<double>{0, std::log(3.0)}) - 0.5623) < 1e-4);
  CHECK(layer_density(std::vector<double>{}) == 0.0);
}

TEST_CASE("allocation examples") {
  DensityProfile sym{{0.4, 0.4}, {}};
  CHECK(allocate(sym, 100).budgets == std::vector<std::int64_t>{50, 50});
  DensityProfile p{{3, 1}, {}};
  auto a = allocate(p, 100);
  CHECK(a.budgets == std::vector<std::int64_t>{75, 25});
  CHECK(a.real_budgets[0] == doctest::Approx(75.0));
  CHECK_FALSE(a.equal_split);
  DensityProfile zeros{{0, 0, 0}, {}};
  auto z = allocate(zeros, 96);
  CHECK(z.budgets == std::vector<std::int64_t>{32, 32, 32});
  CHECK(z.equal_split);
  CHECK(allocate(DensityProfile{{2.0}, {}}, 64).budgets == std::vector<std::int64_t>{64});
}

TEST_CASE("allocation in chunk units") {
  DensityProfile p{{3, 1}, {}};
  auto a = allocate(p, 4 * 32, 32);
  CHECK(a.budgets == std::vector<std::int64_t>{96, 32});
  for (auto b : a.budgets) CHECK(b % 32 == 0);
  CHECK_THROWS_AS(allocate(p, 100, 32), Error);
  CHECK_THROWS_AS(allocate(DensityProfile{{}, {}}, 10), Error);
  CHECK_THROWS_AS(allocate(DensityProfile{{1, -1}, {}}, 10), Error);
  CHECK_THROWS_AS(allocate(p, -32, 32), Error);
}

TEST_CASE("real recurrence matches hand execution") {
  std::vector<double> theta{1, 2, 3, 4};
  auto b = allocate_real(theta, 100);
  // 1/10 of 100, 2/9 of 90, 3/7 of 70, then the remainder.
  CHECK(b[0] == doctest::Approx(10.0));
  CHECK(b[1] == doctest::Approx(20.0));
  CHECK(b[2] == doctest::Approx(30.0));
  CHECK(b[3] == doctest::Approx(40.0));
}

TEST_CASE("budget is conserved") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> layers(1, 32);
  std::uniform_real_distribution<double> th(0.0, 5.0);
  for (int t = 0; t < 500; ++t) {
    const int L = layers(rng);
    DensityProfile p;
    for (int l = 0; l < L; ++l) p.theta.push_back(t % 5 == 0 && l % 2 ? 0.0 : th(rng));
    const std::int64_t total = static_cast<std::int64_t>(L) * 1472;
    auto a = allocate(p, total, 32);
    CHECK(sum(a.budgets) == total);
    for (auto b : a.budgets) {
      CHECK(b >= 0);
      CHECK(b % 32 == 0);
    }
  }
}

TEST_CASE("uniform densities split evenly") {
  for (int L : {1, 2, 3, 7, 8, 32}) {
    DensityProfile p{std::vector<double>(static_cast<std::size_t>(L), 2.3), {}};
    auto a = allocate(p, static_cast<std::int64_t>(L) * 1472, 32);
    for (auto b : a.budgets) CHECK(std::abs(b - 1472) <= 32);
  }
}

TEST_CASE("a denser layer never gets less") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(0.1, 4.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> theta(6);
    for (auto& x : theta) x = th(rng);
    auto base = allocate_real(theta, 6000);
    auto bumped = theta;
    bumped[t % 6] *= 1.5;
    auto more = allocate_real(bumped, 6000);
    CHECK(more[t % 6] >= base[t % 6] - 1e-9);
  }
}

TEST_CASE("largest remainder apportionment") {
  CHECK(apportion(std::vector<double>{1.5, 1.5, 1.0}, 4) == std::vector<std::int64_t>{2, 1, 1});
  CHECK(apportion(std::vector<double>{0.2, 0.3, 2.5}, 3) == std::vector<std::int64_t>{0, 0, 3});
  CHECK(apportion(std::vector<double>{0.4, 0.6}, 1) == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("recall layer floors to whole chunks") {
  std::vector<ScoredChunk> s{{0, 0.5, 32}, {1, 0.7, 32}};
  CHECK(recall_layer(s, 31, 32).selected.empty());
  CHECK(recall_layer(s, 64, 32) == select_topk(s, 64, 32));
  CHECK(recall_layer(s, 40, 32).selected == std::vector<std::int64_t>{1});
}

TEST_CASE("redistributed budget over 32 layers is conserved when chunks suffice") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(0.0, 3.0);
  DensityProfile p;
  for (int l = 0; l < 32; ++l) p.theta.push_back(th(rng));
  auto a = allocate(p, 32 * 1472, 32);
  std::size_t used = 0;
  for (auto b : a.budgets) {
    std::vector<ScoredChunk> chunks;
    for (int i = 0; i < 32 * 46; ++i) chunks.push_back({i, th(rng), 32});
    used += recall_layer(chunks, static_cast<std::size_t>(b), 32).pairs_used;
  }
  CHECK(used == 32u * 1472u);
}
