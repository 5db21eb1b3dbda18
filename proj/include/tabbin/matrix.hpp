#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace tabbin {

// Dense row-major matrix of doubles. All training math is 64-bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<std::size_t>(r) * cols_;
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Sequential ikj loop; reduction order is fixed, so results are
// bitwise reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);

// C = A^T * B where A is (n x r), B is (n x c) -> (r x c).
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);

// C = A * B^T where A is (n x k), B is (m x k) -> (n x m).
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);

// Sum of each column -> vector of length cols.
std::vector<double> column_sums(const Matrix& a);

// New matrix holding the given rows, in the given order.
Matrix gather_rows(const Matrix& a, const std::vector<int>& rows);

// Integer matrix used for bin indices and masks.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(int rows, int cols, int fill = 0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  int& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  int operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  int* data() { return data_.data(); }
  const int* data() const { return data_.data(); }

  friend bool operator==(const IntMatrix& a, const IntMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> data_;
};

}  // namespace tabbin
