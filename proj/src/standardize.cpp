#include "tabbin/standardize.hpp"

#include <cmath>

#include "tabbin/errors.hpp"

namespace tabbin {

Standardizer Standardizer::fit(const Dataset& ds) {
  const auto train_rows = ds.rows_of(Split::train);
  if (train_rows.empty()) throw ValidationError("cannot fit standardizer: train split empty");
  const double n = static_cast<double>(train_rows.size());

  Standardizer s;
  s.mean_.resize(ds.n_features());
  s.std_.resize(ds.n_features());
  for (int j = 0; j < ds.n_features(); ++j) {
    double sum = 0.0;
    for (int i : train_rows) sum += ds.features(i, j);
    const double mean = sum / n;
    double sq = 0.0;
    for (int i : train_rows) {
      const double d = ds.features(i, j) - mean;
      sq += d * d;
    }
    s.mean_[j] = mean;
    s.std_[j] = std::sqrt(sq / n);
  }

  if (ds.task == TaskType::regression) {
    double sum = 0.0;
    for (int i : train_rows) sum += ds.labels[i];
    const double mean = sum / n;
    double sq = 0.0;
    for (int i : train_rows) {
      const double d = ds.labels[i] - mean;
      sq += d * d;
    }
    s.label_mean_ = mean;
    s.label_std_ = std::sqrt(sq / n);
    if (s.label_std_ == 0.0) s.label_std_ = 1.0;  // constant labels pass through
    s.has_label_stats_ = true;
  }
  return s;
}

Matrix Standardizer::transform(const Matrix& raw) const {
  if (raw.cols() != static_cast<int>(mean_.size()))
    throw ValidationError("standardizer fitted for a different feature count");
  Matrix out(raw.rows(), raw.cols());
  for (int i = 0; i < raw.rows(); ++i)
    for (int j = 0; j < raw.cols(); ++j)
      out(i, j) = std_[j] == 0.0 ? 0.0 : (raw(i, j) - mean_[j]) / std_[j];
  return out;
}

double Standardizer::transform_label(double y) const {
  return has_label_stats_ ? (y - label_mean_) / label_std_ : y;
}

std::vector<double> Standardizer::transform_labels(const std::vector<double>& ys) const {
  std::vector<double> out(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) out[i] = transform_label(ys[i]);
  return out;
}

double Standardizer::invert_label(double y_std) const {
  return has_label_stats_ ? y_std * label_std_ + label_mean_ : y_std;
}

}  // namespace tabbin
