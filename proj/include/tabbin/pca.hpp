#pragma once

#include <vector>

#include "tabbin/matrix.hpp"

namespace tabbin {

struct PcaResult {
  std::vector<double> mean;                // per-feature mean removed first
  Matrix components;                       // (2, d); rows are the axes
  std::vector<double> explained_variance;  // top-2 eigenvalues
  Matrix projected;                        // (n, 2)
};

// Top-2 principal components via a Jacobi eigensolver on the covariance
// matrix. Sign convention: each component's largest-magnitude entry is made
// positive. Directions with (numerically) zero variance are zeroed out, so
// rank-deficient inputs project onto fewer than two real axes.
PcaResult pca_top2(const Matrix& x);

// Cyclic Jacobi for a symmetric matrix. Eigenvalues end on the diagonal of
// `a`; columns of `v` are the matching eigenvectors.
void jacobi_eigen(Matrix& a, Matrix& v);

}  // namespace tabbin
