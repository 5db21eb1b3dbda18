#include "tabbin/matrix.hpp"

#include <stdexcept>

namespace tabbin {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims differ");
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p);
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_transpose_a: row counts differ");
  Matrix c(a.cols(), b.cols());
  const int n = a.rows(), r = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (int p = 0; p < r; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c.row(p);
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_transpose_b: col counts differ");
  Matrix c(a.rows(), b.rows());
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < m; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
  return c;
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> s(a.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    for (int j = 0; j < a.cols(); ++j) s[j] += arow[j];
  }
  return s;
}

Matrix gather_rows(const Matrix& a, const std::vector<int>& rows) {
  Matrix out(static_cast<int>(rows.size()), a.cols());
  for (int i = 0; i < out.rows(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows())
      throw std::out_of_range("gather_rows: row index out of range");
    const double* src = a.row(rows[i]);
    double* dst = out.row(i);
    for (int j = 0; j < a.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

}  // namespace tabbin
