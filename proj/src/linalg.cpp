// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "actkv/error.hpp"

namespace actkv {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(Errc::DimMismatch, "matrix data has " + std::to_string(data_.size()) +
                                       " entries, expected " + std::to_string(rows_ * cols_));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<float>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(Errc::DimMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void DenseMatrix::append_rows(const DenseMatrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0) cols_ = other.cols_;
  if (other.cols_ != cols_) {
    throw Error(Errc::DimMismatch, "append_rows: " + std::to_string(other.cols_) +
                                       " columns into " + std::to_string(cols_));
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

void DenseMatrix::append_row(std::span<const float> values) {
  if (rows_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw Error(Errc::DimMismatch, "append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

DenseMatrix DenseMatrix::slice_rows(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw Error(Errc::DimMismatch, "slice_rows out of range");
  std::vector<float> out(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                         data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_));
  return DenseMatrix(count, cols_, std::move(out));
}

DenseMatrix vstack(std::span<const DenseMatrix* const> parts) {
  DenseMatrix out;
  for (const DenseMatrix* p : parts) {
    if (p) out.append_rows(*p);
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(Errc::DimMismatch, "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l1_norm(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += std::abs(static_cast<double>(x));
  return acc;
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(Errc::DimMismatch, "cosine: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < kZeroNormThreshold && nb < kZeroNormThreshold) {
    throw Error(Errc::ZeroNorm, "cosine of two zero vectors");
  }
  if (na < kZeroNormThreshold || nb < kZeroNormThreshold) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine_or_zero(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(Errc::DimMismatch, "cosine: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < kZeroNormThreshold || nb < kZeroNormThreshold) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "softmax of empty list");
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double entropy(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw Error(Errc::NotNormalized, "negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-4) {
    throw Error(Errc::NotNormalized, "probabilities sum to " + std::to_string(total));
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

DenseVector column_mean(const DenseMatrix& m) {
  if (m.rows() == 0) throw Error(Errc::EmptyInput, "mean of zero rows");
  std::vector<double> acc(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc[c] += row[c];
  }
  DenseVector out(m.cols());
  const double n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) out[c] = static_cast<float>(acc[c] / n);
  return out;
}

}  // namespace actkv
