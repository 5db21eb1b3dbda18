#include "tabbin/synthetic.hpp"

#include <algorithm>

#include "tabbin/errors.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

Dataset make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n <= 0 || cfg.d <= 0 || cfg.steps <= 0)
    throw ValidationError("synthetic config dimensions must be positive");

  Rng rng(derive_seed(cfg.seed, "synthetic"));

  // Step levels first so the function shape only depends on the seed, not n.
  Matrix levels(cfg.d, cfg.steps);
  for (int j = 0; j < cfg.d; ++j)
    for (int s = 0; s < cfg.steps; ++s) levels(j, s) = rng.normal();

  Matrix features(cfg.n, cfg.d);
  std::vector<double> labels(cfg.n, 0.0);
  for (int i = 0; i < cfg.n; ++i) {
    double y = 0.0;
    for (int j = 0; j < cfg.d; ++j) {
      const double x = rng.uniform();
      features(i, j) = x;
      int s = static_cast<int>(x * cfg.steps);
      if (s >= cfg.steps) s = cfg.steps - 1;
      y += levels(j, s);
    }
    labels[i] = y + cfg.noise_std * rng.normal();
  }

  if (cfg.classification) {
    std::vector<double> sorted(labels);
    std::sort(sorted.begin(), sorted.end());
    const double median = cfg.n % 2 == 1
                              ? sorted[cfg.n / 2]
                              : 0.5 * (sorted[cfg.n / 2 - 1] + sorted[cfg.n / 2]);
    for (auto& y : labels) y = y > median ? 1.0 : 0.0;
    return make_dataset(std::move(features), std::move(labels), TaskType::binclass);
  }
  return make_dataset(std::move(features), std::move(labels), TaskType::regression);
}

}  // namespace tabbin
