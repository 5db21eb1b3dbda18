#include "tabbin/losses.hpp"

#include <cmath>
#include <string>

#include "tabbin/errors.hpp"

namespace tabbin {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(what) + ": prediction and target shapes differ");
}

}  // namespace

LossResult value_recon_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "value reconstruction");
  const int n = pred.rows();
  if (n == 0) throw ValidationError("value reconstruction: empty batch");
  LossResult out;
  out.grad = Matrix(pred.rows(), pred.cols());
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < pred.cols(); ++j) {
      const double diff = pred(i, j) - target(i, j);
      total += diff * diff;
      out.grad(i, j) = 2.0 * diff / n;
    }
  out.value = total / n;
  return out;
}

LossResult mask_xent_loss(const Matrix& logits, const Matrix& mask) {
  require_same_shape(logits, mask, "mask prediction");
  const int n = logits.rows();
  if (n == 0) throw ValidationError("mask prediction: empty batch");
  LossResult out;
  out.grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < logits.cols(); ++j) {
      const double l = logits(i, j);
      const double m = mask(i, j);
      if (m != 0.0 && m != 1.0)
        throw ValidationError("mask prediction: mask entries must be 0 or 1");
      // -(m log sigma(l) + (1-m) log(1 - sigma(l)))
      // = max(l, 0) - l*m + log(1 + exp(-|l|))
      total += std::max(l, 0.0) - l * m + std::log1p(std::exp(-std::abs(l)));
      const double sig = 1.0 / (1.0 + std::exp(-l));
      out.grad(i, j) = (sig - m) / n;
    }
  out.value = total / n;
  return out;
}

LossResult bin_recon_loss(const Matrix& pred, const Matrix& bin_targets) {
  return value_recon_loss(pred, bin_targets);
}

LossResult bin_xent_loss(const Matrix& logits, const Matrix& one_hot_targets,
                         int bins) {
  require_same_shape(logits, one_hot_targets, "bin classification");
  if (bins <= 0) throw ValidationError("bin classification: bins must be positive");
  if (logits.cols() % bins != 0)
    throw ValidationError("bin classification: width not a multiple of bins");
  const int n = logits.rows();
  const int d = logits.cols() / bins;
  if (n == 0 || d == 0) throw ValidationError("bin classification: empty batch");

  LossResult out;
  out.grad = Matrix(logits.rows(), logits.cols());
  const double scale = 1.0 / (static_cast<double>(n) * d);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const int base = j * bins;
      int hot = -1;
      for (int t = 0; t < bins; ++t) {
        const double u = one_hot_targets(i, base + t);
        if (u == 1.0) {
          if (hot >= 0)
            throw ValidationError("bin classification: target block has two ones");
          hot = t;
        } else if (u != 0.0) {
          throw ValidationError("bin classification: target entries must be 0 or 1");
        }
      }
      if (hot < 0)
        throw ValidationError("bin classification: target block has no one");

      double mx = logits(i, base);
      for (int t = 1; t < bins; ++t) mx = std::max(mx, logits(i, base + t));
      double sum_exp = 0.0;
      for (int t = 0; t < bins; ++t) sum_exp += std::exp(logits(i, base + t) - mx);
      const double log_sum = mx + std::log(sum_exp);
      total += log_sum - logits(i, base + hot);
      for (int t = 0; t < bins; ++t) {
        const double p = std::exp(logits(i, base + t) - log_sum);
        out.grad(i, base + t) = (p - (t == hot ? 1.0 : 0.0)) * scale;
      }
    }
  out.value = total * scale;
  return out;
}

LossResult softmax_xent_loss(const Matrix& logits, const std::vector<int>& labels) {
  const int n = logits.rows();
  const int k = logits.cols();
  if (n == 0 || k == 0) throw ValidationError("classification: empty batch");
  if (static_cast<int>(labels.size()) != n)
    throw ValidationError("classification: label count does not match batch");

  LossResult out;
  out.grad = Matrix(n, k);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k)
      throw ValidationError("classification: label " + std::to_string(y) +
                            " outside [0, " + std::to_string(k) + ")");
    double mx = logits(i, 0);
    for (int t = 1; t < k; ++t) mx = std::max(mx, logits(i, t));
    double sum_exp = 0.0;
    for (int t = 0; t < k; ++t) sum_exp += std::exp(logits(i, t) - mx);
    const double log_sum = mx + std::log(sum_exp);
    total += log_sum - logits(i, y);
    for (int t = 0; t < k; ++t) {
      const double p = std::exp(logits(i, t) - log_sum);
      out.grad(i, t) = (p - (t == y ? 1.0 : 0.0)) / n;
    }
  }
  out.value = total / n;
  return out;
}

double combine_scaled(std::vector<LossResult>& results,
                      const std::vector<double>& weights) {
  if (results.size() != weights.size())
    throw ValidationError("loss combination: weight count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    total += weights[k] * results[k].value;
    auto& g = results[k].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) g(i, j) *= weights[k];
  }
  return total;
}

}  // namespace tabbin
