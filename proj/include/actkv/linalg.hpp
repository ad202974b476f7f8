// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace actkv {

// Dense float32 vector. Kernels accumulate in double and store float.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim, float fill = 0.0f) : data_(dim, fill) {}
  explicit DenseVector(std::vector<float> data) : data_(std::move(data)) {}
  DenseVector(std::initializer_list<float> init) : data_(init) {}

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<float> data_;
};

// Row-major float32 matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);
  DenseMatrix(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  float& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  // Appends rows of `other`; an empty matrix adopts other's column count.
  void append_rows(const DenseMatrix& other);
  void append_row(std::span<const float> values);
  // Keeps rows [first, first + count).
  DenseMatrix slice_rows(std::size_t first, std::size_t count) const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// Concatenates matrices with equal column counts along rows. Empty inputs
// are skipped.
DenseMatrix vstack(std::span<const DenseMatrix* const> parts);

double dot(std::span<const float> a, std::span<const float> b);
double l1_norm(std::span<const float> v);
double l2_norm(std::span<const float> v);

// Norm below which a vector is treated as degenerate by cosine().
inline constexpr double kZeroNormThreshold = 1e-12;

// (a.b) / (|a| |b|). Throws ZeroNorm when both norms are below threshold and
// DimMismatch on unequal lengths. A single zero vector yields 0.
double cosine(std::span<const float> a, std::span<const float> b);

// Cosine that maps the ZeroNorm case to 0.
double cosine_or_zero(std::span<const float> a, std::span<const float> b);

// Max-subtracted softmax. Throws EmptyInput.
std::vector<double> softmax(std::span<const double> scores);

// -sum p log p in nats, with 0 log 0 = 0. Throws NotNormalized when an entry
// is negative or the sum is off by more than 1e-4.
double entropy(std::span<const double> probs);

// Per-column mean of the rows of m.
DenseVector column_mean(const DenseMatrix& m);

}  // namespace actkv
