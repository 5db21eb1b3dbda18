#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/matrix.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

enum class ReplacementMode { none, constant, random };

ReplacementMode replacement_from_string(const std::string& s);
std::string to_string(ReplacementMode m);

struct CorruptionConfig {
  double p_m = 0.0;
  ReplacementMode mode = ReplacementMode::none;
  // Per-feature replacement values for constant mode (train means of the
  // standardized features, i.e. zeros under exact standardization).
  std::vector<double> constant_vector;
};

struct CorruptedBatch {
  Matrix corrupted;  // x tilde
  Matrix mask;       // 1.0 where a feature was replaced
};

// Bernoulli(p_m) mask, one draw per (sample, feature).
Matrix sample_mask(int rows, int cols, double p_m, Rng& rng);

// Replacement values x-bar for a batch: the constant vector broadcast, or a
// random in-batch donor per cell (the donor may be the sample itself).
Matrix build_replacement(const Matrix& batch, const CorruptionConfig& cfg, Rng& rng);

// x tilde = x with masked cells swapped for the replacement value. Uses a
// select, so untouched cells keep their bits.
CorruptedBatch corrupt(const Matrix& batch, const CorruptionConfig& cfg, Rng& rng);

}  // namespace tabbin
