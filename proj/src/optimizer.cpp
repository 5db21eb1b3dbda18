#include "tabbin/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "tabbin/errors.hpp"

namespace tabbin {

double cosine_lr(double base_lr, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 0) throw ValidationError("total_steps must be positive");
  if (step < 0) step = 0;
  if (step > total_steps) step = total_steps;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

AdamW::AdamW(std::vector<ParamSpan> params, const AdamWConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size, 0.0);
    v_.emplace_back(p.size, 0.0);
  }
}

void AdamW::step(double lr) {
  for (const auto& p : params_)
    for (std::size_t i = 0; i < p.size; ++i)
      if (!std::isfinite(p.grad[i]))
        throw RuntimeFailure("non-finite gradient encountered; update aborted");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& p = params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size; ++i) {
      const double g = p.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      // Decoupled weight decay: applied to the parameter, not the gradient.
      p.value[i] -= lr * cfg_.weight_decay * p.value[i];
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace tabbin
