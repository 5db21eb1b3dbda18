#pragma once

#include <vector>

#include "tabbin/matrix.hpp"

namespace tabbin {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d loss / d predictions; same shape as the predictions
};

// Mean over samples of the squared reconstruction error, summed over features:
// (1/N) sum_i ||x_i - xhat_i||^2.
LossResult value_recon_loss(const Matrix& pred, const Matrix& target);

// Binary cross-entropy between per-feature mask logits and the 0/1 mask,
// summed over features and averaged over samples. Computed in the
// numerically stable logit form.
LossResult mask_xent_loss(const Matrix& logits, const Matrix& mask);

// Squared error against numeric bin-index targets; same reduction as
// value_recon_loss.
LossResult bin_recon_loss(const Matrix& pred, const Matrix& bin_targets);

// Softmax cross-entropy per feature over `bins` logits, averaged over samples
// and features. Logits and targets are (N, d*bins); each bins-wide block of
// the targets must be one-hot.
LossResult bin_xent_loss(const Matrix& logits, const Matrix& one_hot_targets,
                         int bins);

// Softmax cross-entropy over class logits with integer labels, mean over
// samples. Used by the supervised probes.
LossResult softmax_xent_loss(const Matrix& logits, const std::vector<int>& labels);

// Weighted sum of loss terms. Scales each gradient by its weight in place and
// returns the combined scalar value.
double combine_scaled(std::vector<LossResult>& results,
                      const std::vector<double>& weights);

}  // namespace tabbin
