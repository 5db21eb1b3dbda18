#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/matrix.hpp"

namespace tabbin {

enum class TaskType { binclass, multiclass, regression };

enum class Split { train, val, test };

TaskType task_from_string(const std::string& s);
std::string to_string(TaskType t);
std::string to_string(Split s);

struct FeatureMeta {
  std::string name;
  bool categorical = false;  // unique count on train below the threshold
  int train_unique_count = 0;
  double train_mean = 0.0;
  double train_std = 0.0;  // population std; 0 only for constant features
};

// In-memory tabular dataset. Immutable once splits and metadata are set.
struct Dataset {
  Matrix features;             // N x d
  std::vector<double> labels;  // class ids (contiguous from 0) or targets
  TaskType task = TaskType::regression;
  std::vector<Split> split;    // per-row tag, length N
  std::vector<FeatureMeta> feature_meta;  // length d, filled after split
  int num_classes = 0;         // classification only

  int n_rows() const { return features.rows(); }
  int n_features() const { return features.cols(); }

  std::vector<int> rows_of(Split s) const;
  Matrix features_of(Split s) const;
  std::vector<double> labels_of(Split s) const;
  std::vector<double> feature_column(int j) const;
  std::vector<double> train_column(int j) const;
};

// Parse a CSV with a header row; every non-label cell must be numeric.
// The label column is removed from the feature matrix. For classification
// tasks, labels are remapped to contiguous ids 0..K-1 in sorted value
// order (already-contiguous labels map to themselves).
Dataset load_csv(const std::string& path, TaskType task,
                 const std::string& label_column);

// Build a dataset directly from values (bindings, tests, synthetic data).
Dataset make_dataset(Matrix features, std::vector<double> labels, TaskType task);

// Deterministic ratio split: fractions must sum to 1, all positive, and
// every split must end up non-empty.
void assign_splits_ratio(Dataset& ds, double train_frac, double val_frac,
                         double test_frac, std::uint64_t seed);

// Splits read from index files, one zero-based row index per line. The
// three files must partition [0, N).
void assign_splits_files(Dataset& ds, const std::string& train_path,
                         const std::string& val_path,
                         const std::string& test_path);

void assign_splits_indices(Dataset& ds, const std::vector<int>& train_idx,
                           const std::vector<int>& val_idx,
                           const std::vector<int>& test_idx);

// Fill per-feature metadata from the train split. Must run after splits
// are assigned.
void compute_feature_meta(Dataset& ds, int categorical_threshold = 20);

// Batch size as a function of the training set size.
int batch_size_rule(int n_train);

// Row-index batches for one epoch: covers every row of the split exactly
// once, final partial batch included. The order is a function of (seed,
// epoch); shuffle=false keeps ascending row order.
std::vector<std::vector<int>> iterate_batches(const Dataset& ds, Split split,
                                              int batch_size,
                                              std::uint64_t seed, int epoch,
                                              bool shuffle);

}  // namespace tabbin
