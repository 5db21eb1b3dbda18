#include "tabbin/corruption.hpp"

#include "tabbin/errors.hpp"

namespace tabbin {

ReplacementMode replacement_from_string(const std::string& s) {
  if (s == "none") return ReplacementMode::none;
  if (s == "constant") return ReplacementMode::constant;
  if (s == "random") return ReplacementMode::random;
  throw ValidationError("unknown replacement mode: '" + s + "'");
}

std::string to_string(ReplacementMode m) {
  switch (m) {
    case ReplacementMode::none: return "none";
    case ReplacementMode::constant: return "constant";
    case ReplacementMode::random: return "random";
  }
  return "?";
}

Matrix sample_mask(int rows, int cols, double p_m, Rng& rng) {
  if (p_m < 0.0 || p_m > 1.0)
    throw ValidationError("masking probability must lie in [0, 1]");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(p_m) ? 1.0 : 0.0;
  return m;
}

Matrix build_replacement(const Matrix& batch, const CorruptionConfig& cfg, Rng& rng) {
  Matrix rep(batch.rows(), batch.cols());
  switch (cfg.mode) {
    case ReplacementMode::none:
      return rep;
    case ReplacementMode::constant: {
      if (static_cast<int>(cfg.constant_vector.size()) != batch.cols())
        throw ValidationError("constant replacement vector length mismatch");
      for (int i = 0; i < batch.rows(); ++i)
        for (int j = 0; j < batch.cols(); ++j) rep(i, j) = cfg.constant_vector[j];
      return rep;
    }
    case ReplacementMode::random: {
      const auto n = static_cast<std::uint64_t>(batch.rows());
      for (int i = 0; i < batch.rows(); ++i)
        for (int j = 0; j < batch.cols(); ++j) {
          const int donor = static_cast<int>(rng.uniform_int(n));
          rep(i, j) = batch(donor, j);
        }
      return rep;
    }
  }
  return rep;
}

CorruptedBatch corrupt(const Matrix& batch, const CorruptionConfig& cfg, Rng& rng) {
  CorruptedBatch out;
  if (cfg.mode == ReplacementMode::none || cfg.p_m == 0.0) {
    out.corrupted = batch;
    out.mask = Matrix(batch.rows(), batch.cols());
    return out;
  }
  out.mask = sample_mask(batch.rows(), batch.cols(), cfg.p_m, rng);
  const Matrix rep = build_replacement(batch, cfg, rng);
  out.corrupted = batch;
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < batch.cols(); ++j)
      if (out.mask(i, j) != 0.0) out.corrupted(i, j) = rep(i, j);
  return out;
}

}  // namespace tabbin
