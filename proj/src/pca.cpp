#include "tabbin/pca.hpp"

#include <cmath>

#include "tabbin/errors.hpp"

namespace tabbin {

void jacobi_eigen(Matrix& a, Matrix& v) {
  const int d = a.rows();
  v = Matrix(d, d);
  for (int i = 0; i < d; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) return;

    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
}

PcaResult pca_top2(const Matrix& x) {
  const int n = x.rows();
  const int d = x.cols();
  if (n == 0 || d == 0) throw ValidationError("PCA needs a non-empty matrix");

  PcaResult out;
  out.mean.assign(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.mean[j] += x(i, j);
  for (int j = 0; j < d; ++j) out.mean[j] /= n;

  Matrix centered(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) centered(i, j) = x(i, j) - out.mean[j];

  Matrix cov = matmul_transpose_a(centered, centered);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cov(i, j) /= n;

  Matrix vecs;
  jacobi_eigen(cov, vecs);

  // Pick the two largest eigenvalues, in order.
  double trace = 0.0;
  for (int j = 0; j < d; ++j) trace += std::abs(cov(j, j));
  const double tol = trace > 0.0 ? trace * 1e-12 : 0.0;

  std::vector<int> order(d);
  for (int j = 0; j < d; ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return cov(a, a) > cov(b, b); });

  out.components = Matrix(2, d);
  out.explained_variance.assign(2, 0.0);
  for (int c = 0; c < 2; ++c) {
    if (c >= d) break;
    const int j = order[c];
    const double lambda = cov(j, j);
    if (lambda <= tol) break;  // rank deficient: leave the axis zeroed
    out.explained_variance[c] = lambda;
    int arg = 0;
    double best = 0.0;
    for (int k = 0; k < d; ++k) {
      out.components(c, k) = vecs(k, j);
      if (std::abs(vecs(k, j)) > best) {
        best = std::abs(vecs(k, j));
        arg = k;
      }
    }
    if (out.components(c, arg) < 0.0)
      for (int k = 0; k < d; ++k) out.components(c, k) = -out.components(c, k);
  }

  out.projected = matmul_transpose_b(centered, out.components);
  return out;
}

}  // namespace tabbin
