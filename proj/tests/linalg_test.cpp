// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "actkv/error.hpp"
#include "actkv/linalg.hpp"

using namespace actkv;

namespace {

std::vector<float> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<float> dist;
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("cosine basics") {
  DenseVector a{1, 2, 3};
  CHECK(cosine(a.span(), a.span()) == doctest::Approx(1.0));
  DenseVector x{1, 0}, y{0, 1}, z{1, 1};
  CHECK(cosine(x.span(), y.span()) == 0.0);
  CHECK(std::abs(cosine(z.span(), x.span()) - 1.0 / std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("cosine zero norm handling") {
  DenseVector zero{0, 0}, x{1, 0};
  CHECK_THROWS_AS(cosine(zero.span(), zero.span()), Error);
  try {
    cosine(zero.span(), zero.span());
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroNorm);
  }
  CHECK(cosine(zero.span(), x.span()) == 0.0);
  CHECK(cosine_or_zero(zero.span(), zero.span()) == 0.0);
  DenseVector three{1, 2, 3};
  CHECK_THROWS_AS(cosine(x.span(), three.span()), Error);
}

TEST_CASE("cosine is scale invariant and bounded") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> scale(0.01f, 100.0f);
  for (int t = 0; t < 200; ++t) {
    auto a = random_vec(rng, 16);
    auto b = random_vec(rng, 16);
    const double base = cosine(a, b);
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
    const float s = scale(rng);
    for (auto& v : a) v *= s;
    CHECK(std::abs(cosine(a, b) - base) < 1e-6);
  }
}

TEST_CASE("softmax examples") {
  std::vector<double> four(4, 0.0);
  for (double p : softmax(four)) CHECK(p == doctest::Approx(0.25));
  std::vector<double> big{1000, 1000};
  auto pb = softmax(big);
  CHECK(pb[0] == doctest::Approx(0.5));
  CHECK(pb[1] == doctest::Approx(0.5));
  std::vector<double> l3{0, std::log(3.0)};
  auto p = softmax(l3);
  CHECK(std::abs(p[0] - 0.25) < 1e-6);
  CHECK(std::abs(p[1] - 0.75) < 1e-6);
  CHECK_THROWS_AS(softmax(std::vector<double>{}), Error);
}

TEST_CASE("softmax is shift invariant and sums to one") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(1 + t % 17);
    for (auto& x : s) x = dist(rng);
    auto p = softmax(s);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const double shift = dist(rng) * 100.0;
    for (auto& x : s) x += shift;
    auto q = softmax(s);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("entropy examples") {
  std::vector<double> uniform(4, 0.25);
  CHECK(std::abs(entropy(uniform) - std::log(4.0)) < 1e-12);
  CHECK(entropy(std::vector<double>{1, 0, 0}) == 0.0);
  CHECK(std::abs(entropy(std::vector<double>{0.25, 0.75}) - 0.5623351) < 1e-6);
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.6}), Error);
  CHECK_THROWS_AS(entropy(std::vector<double>{1.5, -0.5}), Error);
}

TEST_CASE("entropy is bounded by log n") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(2 + t % 30);
    for (auto& x : s) x = dist(rng);
    const double h = entropy(softmax(s));
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(s.size())) + 1e-12);
  }
}

TEST_CASE("norms") {
  DenseVector zero{0, 0}, v{3, -4}, one{1};
  CHECK(l1_norm(zero.span()) == 0.0);
  CHECK(l2_norm(zero.span()) == 0.0);
  CHECK(l1_norm(v.span()) == 7.0);
  CHECK(l2_norm(v.span()) == 5.0);
  CHECK(l1_norm(one.span()) == 1.0);
  CHECK(l2_norm(one.span()) == 1.0);
}

TEST_CASE("matrix helpers") {
  DenseMatrix m{{1, 0}, {0, 1}, {2, 2}};
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(column_mean(m) == DenseVector{1, 1});
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<float>{1, 2, 3}), Error);

  DenseMatrix a;
  a.append_rows(m);
  CHECK(a == m);
  a.append_row(std::vector<float>{5, 6});
  CHECK(a.rows() == 4);
  CHECK(a.slice_rows(3, 1) == DenseMatrix{{5, 6}});

  const DenseMatrix* parts[] = {&m, &m};
  auto s = vstack(parts);
  CHECK(s.rows() == 6);
  CHECK(s.slice_rows(3, 3) == m);
}
