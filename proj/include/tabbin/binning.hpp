#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/dataset.hpp"
#include "tabbin/matrix.hpp"

namespace tabbin {

enum class BinMethod { quantile, equal_width, per_value };

BinMethod bin_method_from_string(const std::string& s);
std::string to_string(BinMethod m);

// Fitted bins for one feature. Interval features carry strictly
// increasing boundaries b_1..b_{T-1} and map v to the index t with
// b_{t-1} <= v < b_t (b_0 = -inf, b_T = +inf, so out-of-range values
// clamp to the first or last bin). Value features carry the sorted
// distinct train values, one bin each; unseen values go to the nearest
// distinct value's bin.
struct FeatureBins {
  bool value_based = false;
  std::vector<double> boundaries;       // interval mode, size bin_count-1
  std::vector<double> distinct_values;  // value mode, size bin_count
  std::vector<double> bin_means;        // train mean of raw values per bin
  int bin_count = 1;

  int assign(double v) const;
};

// Per-feature bins fitted on the train split.
struct BinningSpec {
  BinMethod method = BinMethod::quantile;
  int requested_bins = 2;  // T
  std::vector<FeatureBins> features;

  int n_features() const { return static_cast<int>(features.size()); }
  // Largest effective bin count across features; the one-hot width.
  int max_bins() const;
};

// Quantile bins: boundary for level t/T sits at the sorted train column's
// ceil(t*n/T)-th entry counting from zero, which makes bins hold equal
// counts whenever T divides n and values are distinct. Duplicate
// boundaries collapse. Columns with fewer than T distinct values fall
// back to one bin per distinct value.
FeatureBins fit_quantile_bins(const std::vector<double>& train_column, int bins);

// Equal-width bins between train min and max; a constant column yields a
// single bin.
FeatureBins fit_equal_width_bins(const std::vector<double>& train_column, int bins);

// One bin per distinct train value.
FeatureBins fit_per_value_bins(const std::vector<double>& train_column);

// Fit every feature of the dataset's train split.
BinningSpec fit_binning(const Dataset& ds, BinMethod method, int bins);

// Bin indices (1-based) for a whole column.
std::vector<int> assign_bins(const std::vector<double>& column,
                             const FeatureBins& fb);

// Bin indices for every row and feature of a matrix of raw values.
IntMatrix assign_bins_matrix(const Matrix& raw, const BinningSpec& spec);

// One-hot encode a d-vector of 1-based indices into a d x width matrix.
Matrix one_hot(const std::vector<int>& indices, int width);

// One-hot tensor for a whole index matrix, flattened to N x (d*width).
Matrix one_hot_matrix(const IntMatrix& indices, int width);

enum class BinAblation { none, shuffle_order, bin_averages, per_value };

BinAblation ablation_from_string(const std::string& s);
std::string to_string(BinAblation a);

// Regression targets for bin reconstruction: raw 1-based indices as
// doubles, transformed per the requested ablation.
//   shuffle_order — independent random permutation of bin labels per feature
//   bin_averages  — each index replaced by the train mean of its bin
//   per_value     — refit with one bin per distinct train value
// The per_value ablation needs the dataset to refit; others use the spec.
Matrix bin_targets(const Matrix& raw, const BinningSpec& spec,
                   BinAblation ablation, std::uint64_t seed,
                   const Dataset* ds_for_refit = nullptr);

// Text serialization, 17 significant digits, bit-exact on reload.
std::string serialize_binning(const BinningSpec& spec);
BinningSpec parse_binning(const std::string& text);
void save_binning(const BinningSpec& spec, const std::string& path);
BinningSpec load_binning(const std::string& path);

}  // namespace tabbin
