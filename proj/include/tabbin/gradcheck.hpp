#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tabbin/mlp.hpp"

namespace tabbin {

// Central-difference gradient check. `loss_fn` recomputes the scalar loss
// from the current parameter values; `params` must already hold the analytic
// gradients for those values. Returns the largest relative error seen.
template <typename Fn>
double max_grad_rel_error(const std::vector<ParamSpan>& params, Fn&& loss_fn,
                          double h = 1e-5) {
  double worst = 0.0;
  for (const auto& p : params)
    for (std::size_t i = 0; i < p.size; ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double f_plus = loss_fn();
      p.value[i] = saved - h;
      const double f_minus = loss_fn();
      p.value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p.grad[i];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  return worst;
}

}  // namespace tabbin
