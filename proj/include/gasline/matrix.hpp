/*
Copyright (c) 2026 The gasline Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gasline {

class Matrix;

/// Non-owning read-only view of a row-major float block.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const float* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}
  MatrixView(const Matrix& m);  // NOLINT(google-explicit-constructor)

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }
  const float* data() const noexcept { return data_; }

  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const float> row(std::size_t r) const { return {data_ + r * cols_, cols_}; }
  std::span<const float> values() const { return {data_, size()}; }

  /// Rows [begin, end) as a view.
  MatrixView slice_rows(std::size_t begin, std::size_t end) const;

 private:
  const float* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Row-major dense matrix of 32-bit floats. A 0 x k matrix is valid.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws ShapeError unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
  /// Nested-list literal; every row must have the same length.
  Matrix(std::initializer_list<std::initializer_list<float>> rows);

  static Matrix from_view(MatrixView v);
  /// A 1 x n row.
  static Matrix row_vector(std::span<const float> values);
  /// A n x 1 column.
  static Matrix column_vector(std::span<const float> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  MatrixView view() const { return {data_.data(), rows_, cols_}; }

  /// Exact (bitwise for non-NaN values) equality of shape and contents.
  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

inline MatrixView::MatrixView(const Matrix& m) : MatrixView(m.data(), m.rows(), m.cols()) {}

/// "RxC" for diagnostics.
std::string shape_string(std::size_t rows, std::size_t cols);
inline std::string shape_string(MatrixView m) { return shape_string(m.rows(), m.cols()); }

/// True when both matrices have the same shape and identical bit patterns.
bool bitwise_equal(MatrixView a, MatrixView b);

/// max_i |a_i - b_i| / max(|b_i|, 1). Shapes must match (ShapeError otherwise).
double max_relative_error(MatrixView a, MatrixView b);

/// max_i |a_i - b_i|. Shapes must match (ShapeError otherwise).
double max_abs_error(MatrixView a, MatrixView b);

}  // namespace gasline
