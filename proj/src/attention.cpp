// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <string>

#include "actkv/engine.hpp"
#include "actkv/error.hpp"

namespace actkv {

namespace {

void check_attention_shapes(const DenseMatrix& q, const DenseMatrix& k, bool causal) {
  if (q.cols() != k.cols() || (k.rows() > 0 && q.cols() == 0)) {
    throw Error(Errc::ShapeMismatch, "query width " + std::to_string(q.cols()) +
                                         " != key width " + std::to_string(k.cols()));
  }
  if (causal && k.rows() < q.rows()) {
    throw Error(Errc::ShapeMismatch, "causal attention needs the query block inside the keys");
  }
  if (q.rows() > 0 && k.rows() == 0) throw Error(Errc::ShapeMismatch, "attention over no keys");
}

}  // namespace

std::vector<double> attention_weights(const DenseMatrix& q, const DenseMatrix& k, bool causal) {
  check_attention_shapes(q, k, causal);
  const std::size_t n = k.rows();
  const std::size_t r = q.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  std::vector<double> weights(r * n, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t visible = causal ? n - r + i + 1 : n;
    double* row = weights.data() + i * n;
    double peak = -INFINITY;
    for (std::size_t j = 0; j < visible; ++j) {
      row[j] = dot(q.row(i), k.row(j)) * scale;
      peak = std::max(peak, row[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < visible; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < visible; ++j) row[j] /= total;
  }
  return weights;
}

AttentionResult attend(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v, bool causal) {
  if (k.rows() != v.rows()) {
    throw Error(Errc::ShapeMismatch, std::to_string(k.rows()) + " keys but " +
                                         std::to_string(v.rows()) + " values");
  }
  const auto weights = attention_weights(q, k, causal);
  const std::size_t n = k.rows();
  AttentionResult result{DenseMatrix(q.rows(), v.cols()), 0.0};
  std::vector<double> acc(v.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* w = weights.data() + i * n;
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row_sum += w[j];
      if (w[j] == 0.0) continue;
      auto vr = v.row(j);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += w[j] * vr[c];
    }
    result.max_row_error = std::max(result.max_row_error, std::abs(row_sum - 1.0));
    auto o = result.output.row(i);
    for (std::size_t c = 0; c < acc.size(); ++c) o[c] = static_cast<float>(acc[c]);
  }
  return result;
}

DenseMatrix reference_attention(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v,
                                bool causal) {
  return attend(q, k, v, causal).output;
}

}  // namespace actkv
