#pragma once

#include <vector>

#include "tabbin/dataset.hpp"
#include "tabbin/matrix.hpp"

namespace tabbin {

// Per-feature (mean, std) fitted on the train split only. Constant
// features (std = 0) standardize to 0. For regression tasks label stats
// are fitted as well.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const Dataset& ds);

  Matrix transform(const Matrix& raw) const;
  double transform_label(double y) const;
  std::vector<double> transform_labels(const std::vector<double>& ys) const;
  double invert_label(double y_std) const;

  // Standardized features for every row of the dataset.
  Matrix transform_all(const Dataset& ds) const { return transform(ds.features); }

  const std::vector<double>& means() const { return mean_; }
  const std::vector<double>& stds() const { return std_; }
  bool has_label_stats() const { return has_label_stats_; }
  double label_mean() const { return label_mean_; }
  double label_std() const { return label_std_; }

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
  bool has_label_stats_ = false;
  double label_mean_ = 0.0;
  double label_std_ = 1.0;
};

}  // namespace tabbin
