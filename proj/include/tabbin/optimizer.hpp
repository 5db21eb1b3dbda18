#pragma once

#include <cstdint>
#include <vector>

#include "tabbin/mlp.hpp"

namespace tabbin {

// Cosine annealing from base_lr to zero over total_steps optimizer steps.
double cosine_lr(double base_lr, std::int64_t step, std::int64_t total_steps);

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<ParamSpan> params, const AdamWConfig& cfg);

  // One update with the given learning rate. Throws RuntimeFailure if any
  // gradient is not finite; parameters are left untouched in that case.
  void step(double lr);
  std::int64_t steps_taken() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<ParamSpan> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
};

}  // namespace tabbin
