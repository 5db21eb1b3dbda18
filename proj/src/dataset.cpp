#include "tabbin/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tabbin/errors.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

TaskType task_from_string(const std::string& s) {
  if (s == "binclass") return TaskType::binclass;
  if (s == "multiclass") return TaskType::multiclass;
  if (s == "regression") return TaskType::regression;
  throw ValidationError("unknown task type: '" + s +
                        "' (expected binclass, multiclass or regression)");
}

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::binclass: return "binclass";
    case TaskType::multiclass: return "multiclass";
    case TaskType::regression: return "regression";
  }
  return "?";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::vector<int> Dataset::rows_of(Split s) const {
  std::vector<int> out;
  for (int i = 0; i < n_rows(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

Matrix Dataset::features_of(Split s) const {
  const auto idx = rows_of(s);
  Matrix out(static_cast<int>(idx.size()), n_features());
  for (int r = 0; r < static_cast<int>(idx.size()); ++r)
    for (int j = 0; j < n_features(); ++j) out(r, j) = features(idx[r], j);
  return out;
}

std::vector<double> Dataset::labels_of(Split s) const {
  std::vector<double> out;
  for (int i = 0; i < n_rows(); ++i)
    if (split[i] == s) out.push_back(labels[i]);
  return out;
}

std::vector<double> Dataset::feature_column(int j) const {
  std::vector<double> out(n_rows());
  for (int i = 0; i < n_rows(); ++i) out[i] = features(i, j);
  return out;
}

std::vector<double> Dataset::train_column(int j) const {
  std::vector<double> out;
  for (int i = 0; i < n_rows(); ++i)
    if (split[i] == Split::train) out.push_back(features(i, j));
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, int row, const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty())
    throw ValidationError("missing value at row " + std::to_string(row) +
                          ", column '" + column + "'");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    throw ValidationError("cannot parse cell '" + s + "' at row " +
                          std::to_string(row) + ", column '" + column + "'");
  return v;
}

void remap_class_labels(Dataset& ds) {
  std::set<double> values(ds.labels.begin(), ds.labels.end());
  std::map<double, int> id;
  int next = 0;
  for (double v : values) {
    if (v != std::floor(v))
      throw ValidationError("classification label '" + std::to_string(v) +
                            "' is not an integer");
    id[v] = next++;
  }
  for (double& v : ds.labels) v = id[v];
  ds.num_classes = next;
  if (ds.task == TaskType::binclass && ds.num_classes != 2)
    throw ValidationError("binclass task requires exactly 2 label values, got " +
                          std::to_string(ds.num_classes));
  if (ds.num_classes < 2)
    throw ValidationError("classification task requires at least 2 classes");
}

}  // namespace

Dataset load_csv(const std::string& path, TaskType task,
                 const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("dataset file is empty: " + path);
  const auto header = split_csv_line(line);

  int label_idx = -1;
  for (int j = 0; j < static_cast<int>(header.size()); ++j)
    if (trim(header[j]) == label_column) label_idx = j;
  if (label_idx < 0)
    throw ValidationError("label column '" + label_column + "' not found in " + path);

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  int row_no = 1;  // header is row 0
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
    std::vector<double> feat;
    feat.reserve(header.size() - 1);
    for (int j = 0; j < static_cast<int>(cells.size()); ++j) {
      const double v = parse_cell(cells[j], row_no, trim(header[j]));
      if (j == label_idx)
        labels.push_back(v);
      else
        feat.push_back(v);
    }
    rows.push_back(std::move(feat));
    ++row_no;
  }
  if (rows.empty()) throw ValidationError("dataset has no data rows: " + path);

  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].size());
  Matrix features(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) features(i, j) = rows[i][j];

  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.task = task;
  ds.feature_meta.resize(d);
  int fj = 0;
  for (int j = 0; j < static_cast<int>(header.size()); ++j)
    if (j != label_idx) ds.feature_meta[fj++].name = trim(header[j]);
  if (task != TaskType::regression) remap_class_labels(ds);
  return ds;
}

Dataset make_dataset(Matrix features, std::vector<double> labels, TaskType task) {
  if (features.rows() != static_cast<int>(labels.size()))
    throw ValidationError("feature rows and label count differ");
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.task = task;
  ds.feature_meta.resize(ds.features.cols());
  for (int j = 0; j < ds.features.cols(); ++j)
    ds.feature_meta[j].name = "f" + std::to_string(j);
  if (task != TaskType::regression) remap_class_labels(ds);
  return ds;
}

void assign_splits_ratio(Dataset& ds, double train_frac, double val_frac,
                         double test_frac, std::uint64_t seed) {
  const double sum = train_frac + val_frac + test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1, got " + std::to_string(sum));
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0)
    throw ValidationError("split fractions must all be positive");

  const int n = ds.n_rows();
  // Largest-remainder apportionment of row counts.
  const double fr[3] = {train_frac, val_frac, test_frac};
  int counts[3];
  double rem[3];
  int assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = fr[k] * n;
    counts[k] = static_cast<int>(std::floor(exact + 1e-12));
    rem[k] = exact - counts[k];
    assigned += counts[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best]) best = k;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
    throw ValidationError("split fractions leave an empty split for N=" +
                          std::to_string(n));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }

  ds.split.assign(n, Split::train);
  for (int i = 0; i < counts[0]; ++i) ds.split[order[i]] = Split::train;
  for (int i = counts[0]; i < counts[0] + counts[1]; ++i) ds.split[order[i]] = Split::val;
  for (int i = counts[0] + counts[1]; i < n; ++i) ds.split[order[i]] = Split::test;
}

namespace {

std::vector<int> read_index_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open split index file: " + path);
  std::vector<int> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError("bad index '" + s + "' at line " +
                            std::to_string(line_no) + " of " + path);
    if (v < 0 || v >= n)
      throw ValidationError("index " + std::to_string(v) + " in " + path +
                            " is outside [0, " + std::to_string(n) + ")");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void assign_splits_files(Dataset& ds, const std::string& train_path,
                         const std::string& val_path,
                         const std::string& test_path) {
  const int n = ds.n_rows();
  assign_splits_indices(ds, read_index_file(train_path, n),
                        read_index_file(val_path, n),
                        read_index_file(test_path, n));
}

void assign_splits_indices(Dataset& ds, const std::vector<int>& train_idx,
                           const std::vector<int>& val_idx,
                           const std::vector<int>& test_idx) {
  const int n = ds.n_rows();
  std::vector<int> seen(n, 0);
  auto mark = [&](const std::vector<int>& idx, Split s) {
    for (int i : idx) {
      if (i < 0 || i >= n)
        throw ValidationError("split index " + std::to_string(i) +
                              " is outside [0, " + std::to_string(n) + ")");
      if (seen[i]++)
        throw ValidationError("row " + std::to_string(i) +
                              " appears in more than one split");
      ds.split[i] = s;
    }
  };
  ds.split.assign(n, Split::train);
  mark(train_idx, Split::train);
  mark(val_idx, Split::val);
  mark(test_idx, Split::test);
  for (int i = 0; i < n; ++i)
    if (!seen[i])
      throw ValidationError("row " + std::to_string(i) +
                            " is missing from the split index files");
  if (train_idx.empty() || val_idx.empty() || test_idx.empty())
    throw ValidationError("every split must be non-empty");
}

void compute_feature_meta(Dataset& ds, int categorical_threshold) {
  if (ds.split.size() != static_cast<std::size_t>(ds.n_rows()))
    throw ValidationError("compute_feature_meta requires assigned splits");
  const auto train_rows = ds.rows_of(Split::train);
  if (train_rows.empty()) throw ValidationError("train split is empty");
  const double n = static_cast<double>(train_rows.size());
  for (int j = 0; j < ds.n_features(); ++j) {
    auto& meta = ds.feature_meta[j];
    std::set<double> uniq;
    double sum = 0.0;
    for (int i : train_rows) {
      uniq.insert(ds.features(i, j));
      sum += ds.features(i, j);
    }
    meta.train_unique_count = static_cast<int>(uniq.size());
    meta.categorical = meta.train_unique_count < categorical_threshold;
    meta.train_mean = sum / n;
    double sq = 0.0;
    for (int i : train_rows) {
      const double dlt = ds.features(i, j) - meta.train_mean;
      sq += dlt * dlt;
    }
    meta.train_std = std::sqrt(sq / n);
  }
}

int batch_size_rule(int n_train) {
  if (n_train < 1) throw ValidationError("batch_size_rule requires n_train >= 1");
  if (n_train < 1000) return 64;
  if (n_train < 5000) return 128;
  if (n_train < 10000) return 256;
  if (n_train < 50000) return 512;
  return 1024;
}

std::vector<std::vector<int>> iterate_batches(const Dataset& ds, Split split,
                                              int batch_size,
                                              std::uint64_t seed, int epoch,
                                              bool shuffle) {
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  std::vector<int> rows = ds.rows_of(split);
  if (rows.empty()) throw ValidationError("split has no rows: " + to_string(split));
  if (shuffle) {
    Rng rng(derive_seed(seed, "batches", static_cast<std::uint64_t>(epoch)));
    for (int i = static_cast<int>(rows.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(rows[i], rows[j]);
    }
  }
  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    batches.emplace_back(rows.begin() + start, rows.begin() + end);
  }
  return batches;
}

}  // namespace tabbin
