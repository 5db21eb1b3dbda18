#pragma once

#include <cstdint>

#include "tabbin/dataset.hpp"

namespace tabbin {

// Step-structured regression data: features are iid U[0,1]; the target is a
// sum over features of a piecewise-constant function (equal-width steps with
// N(0,1) levels) plus Gaussian noise. The classification variant thresholds
// the noisy target at its median, giving a balanced binary task.
struct SyntheticConfig {
  int n = 4000;
  int d = 8;
  int steps = 5;
  double noise_std = 0.1;
  bool classification = false;
  std::uint64_t seed = 0;
};

// Splits are not assigned; callers pick their own ratio and seed.
Dataset make_synthetic(const SyntheticConfig& cfg);

}  // namespace tabbin
