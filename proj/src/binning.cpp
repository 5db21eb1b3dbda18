#include "tabbin/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tabbin/errors.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

BinMethod bin_method_from_string(const std::string& s) {
  if (s == "quantile") return BinMethod::quantile;
  if (s == "equal_width") return BinMethod::equal_width;
  if (s == "per_value") return BinMethod::per_value;
  throw ValidationError("unknown binning method: '" + s + "'");
}

std::string to_string(BinMethod m) {
  switch (m) {
    case BinMethod::quantile: return "quantile";
    case BinMethod::equal_width: return "equal_width";
    case BinMethod::per_value: return "per_value";
  }
  return "?";
}

BinAblation ablation_from_string(const std::string& s) {
  if (s == "none") return BinAblation::none;
  if (s == "shuffle_order") return BinAblation::shuffle_order;
  if (s == "bin_averages") return BinAblation::bin_averages;
  if (s == "per_value") return BinAblation::per_value;
  throw ValidationError("unknown ablation: '" + s + "'");
}

std::string to_string(BinAblation a) {
  switch (a) {
    case BinAblation::none: return "none";
    case BinAblation::shuffle_order: return "shuffle_order";
    case BinAblation::bin_averages: return "bin_averages";
    case BinAblation::per_value: return "per_value";
  }
  return "?";
}

int FeatureBins::assign(double v) const {
  if (value_based) {
    // Nearest distinct value; ties go to the smaller one.
    const auto it = std::lower_bound(distinct_values.begin(), distinct_values.end(), v);
    if (it == distinct_values.begin()) return 1;
    if (it == distinct_values.end()) return bin_count;
    const auto lo = it - 1;
    const double d_lo = v - *lo;
    const double d_hi = *it - v;
    const int idx = static_cast<int>(d_lo <= d_hi ? lo - distinct_values.begin()
                                                  : it - distinct_values.begin());
    return idx + 1;
  }
  // Count of boundaries <= v, plus one. Matches [b_{t-1}, b_t) with the
  // outermost bins open to +-inf.
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), v);
  return static_cast<int>(it - boundaries.begin()) + 1;
}

int BinningSpec::max_bins() const {
  int m = 1;
  for (const auto& fb : features) m = std::max(m, fb.bin_count);
  return m;
}

namespace {

std::vector<double> sorted_copy(const std::vector<double>& v) {
  std::vector<double> s(v);
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<double> distinct_sorted(const std::vector<double>& v) {
  std::vector<double> s = sorted_copy(v);
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

void fill_bin_means(FeatureBins& fb, const std::vector<double>& train_column) {
  std::vector<double> sum(fb.bin_count, 0.0);
  std::vector<int> count(fb.bin_count, 0);
  for (double v : train_column) {
    const int t = fb.assign(v);
    sum[t - 1] += v;
    ++count[t - 1];
  }
  fb.bin_means.resize(fb.bin_count);
  for (int t = 0; t < fb.bin_count; ++t)
    fb.bin_means[t] = count[t] > 0 ? sum[t] / count[t] : 0.0;
}

}  // namespace

FeatureBins fit_per_value_bins(const std::vector<double>& train_column) {
  if (train_column.empty()) throw ValidationError("cannot fit bins on an empty column");
  FeatureBins fb;
  fb.value_based = true;
  fb.distinct_values = distinct_sorted(train_column);
  fb.bin_count = static_cast<int>(fb.distinct_values.size());
  fill_bin_means(fb, train_column);
  return fb;
}

FeatureBins fit_quantile_bins(const std::vector<double>& train_column, int bins) {
  if (bins < 2) throw ValidationError("bin count must be >= 2");
  if (train_column.empty()) throw ValidationError("cannot fit bins on an empty column");

  const auto uniq = distinct_sorted(train_column);
  if (static_cast<int>(uniq.size()) < bins) return fit_per_value_bins(train_column);

  const auto sorted = sorted_copy(train_column);
  const std::size_t n = sorted.size();
  FeatureBins fb;
  for (int t = 1; t < bins; ++t) {
    const double level = static_cast<double>(t) / bins;
    std::size_t pos = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    if (pos >= n) pos = n - 1;
    fb.boundaries.push_back(sorted[pos]);
  }
  // Heavy ties can produce repeated boundaries; merge them.
  fb.boundaries.erase(std::unique(fb.boundaries.begin(), fb.boundaries.end()),
                      fb.boundaries.end());
  // A boundary at the column minimum would leave bin 1 empty on train.
  while (!fb.boundaries.empty() && fb.boundaries.front() <= sorted.front())
    fb.boundaries.erase(fb.boundaries.begin());
  fb.bin_count = static_cast<int>(fb.boundaries.size()) + 1;
  fill_bin_means(fb, train_column);
  return fb;
}

FeatureBins fit_equal_width_bins(const std::vector<double>& train_column, int bins) {
  if (bins < 2) throw ValidationError("bin count must be >= 2");
  if (train_column.empty()) throw ValidationError("cannot fit bins on an empty column");

  const auto [mn_it, mx_it] = std::minmax_element(train_column.begin(), train_column.end());
  const double mn = *mn_it, mx = *mx_it;
  FeatureBins fb;
  if (mn < mx) {
    for (int t = 1; t < bins; ++t)
      fb.boundaries.push_back(mn + (mx - mn) * static_cast<double>(t) / bins);
    fb.boundaries.erase(std::unique(fb.boundaries.begin(), fb.boundaries.end()),
                        fb.boundaries.end());
  }
  fb.bin_count = static_cast<int>(fb.boundaries.size()) + 1;
  fill_bin_means(fb, train_column);
  return fb;
}

BinningSpec fit_binning(const Dataset& ds, BinMethod method, int bins) {
  if (method != BinMethod::per_value && bins < 2)
    throw ValidationError("bin count must be >= 2");
  BinningSpec spec;
  spec.method = method;
  spec.requested_bins = bins;
  spec.features.reserve(ds.n_features());
  for (int j = 0; j < ds.n_features(); ++j) {
    const auto col = ds.train_column(j);
    switch (method) {
      case BinMethod::quantile:
        spec.features.push_back(fit_quantile_bins(col, bins));
        break;
      case BinMethod::equal_width:
        spec.features.push_back(fit_equal_width_bins(col, bins));
        break;
      case BinMethod::per_value:
        spec.features.push_back(fit_per_value_bins(col));
        break;
    }
  }
  return spec;
}

std::vector<int> assign_bins(const std::vector<double>& column, const FeatureBins& fb) {
  std::vector<int> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) out[i] = fb.assign(column[i]);
  return out;
}

IntMatrix assign_bins_matrix(const Matrix& raw, const BinningSpec& spec) {
  if (raw.cols() != spec.n_features())
    throw ValidationError("binning spec fitted for a different feature count");
  IntMatrix out(raw.rows(), raw.cols());
  for (int j = 0; j < raw.cols(); ++j) {
    const auto& fb = spec.features[j];
    for (int i = 0; i < raw.rows(); ++i) out(i, j) = fb.assign(raw(i, j));
  }
  return out;
}

Matrix one_hot(const std::vector<int>& indices, int width) {
  Matrix out(static_cast<int>(indices.size()), width);
  for (int r = 0; r < static_cast<int>(indices.size()); ++r) {
    const int t = indices[r];
    if (t < 1 || t > width)
      throw ValidationError("bin index " + std::to_string(t) +
                            " outside [1, " + std::to_string(width) + "]");
    out(r, t - 1) = 1.0;
  }
  return out;
}

Matrix one_hot_matrix(const IntMatrix& indices, int width) {
  Matrix out(indices.rows(), indices.cols() * width);
  for (int i = 0; i < indices.rows(); ++i)
    for (int j = 0; j < indices.cols(); ++j) {
      const int t = indices(i, j);
      if (t < 1 || t > width)
        throw ValidationError("bin index " + std::to_string(t) +
                              " outside [1, " + std::to_string(width) + "]");
      out(i, j * width + t - 1) = 1.0;
    }
  return out;
}

Matrix bin_targets(const Matrix& raw, const BinningSpec& spec,
                   BinAblation ablation, std::uint64_t seed,
                   const Dataset* ds_for_refit) {
  if (ablation == BinAblation::per_value) {
    if (ds_for_refit == nullptr)
      throw ValidationError("per_value ablation needs the dataset to refit");
    const BinningSpec refit = fit_binning(*ds_for_refit, BinMethod::per_value, 2);
    return bin_targets(raw, refit, BinAblation::none, seed, nullptr);
  }

  const IntMatrix idx = assign_bins_matrix(raw, spec);
  Matrix out(raw.rows(), raw.cols());

  if (ablation == BinAblation::shuffle_order) {
    for (int j = 0; j < raw.cols(); ++j) {
      const int t_j = spec.features[j].bin_count;
      std::vector<int> perm(t_j);
      for (int t = 0; t < t_j; ++t) perm[t] = t + 1;
      Rng rng(derive_seed(seed, "shuffle_bins", static_cast<std::uint64_t>(j)));
      for (int i = t_j - 1; i > 0; --i) {
        const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[k]);
      }
      for (int i = 0; i < raw.rows(); ++i) out(i, j) = perm[idx(i, j) - 1];
    }
    return out;
  }

  if (ablation == BinAblation::bin_averages) {
    for (int j = 0; j < raw.cols(); ++j)
      for (int i = 0; i < raw.rows(); ++i)
        out(i, j) = spec.features[j].bin_means[idx(i, j) - 1];
    return out;
  }

  for (int i = 0; i < raw.rows(); ++i)
    for (int j = 0; j < raw.cols(); ++j) out(i, j) = idx(i, j);
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_values(std::ostringstream& out, const std::vector<double>& vs) {
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out << ' ';
    out << fmt17(vs[i]);
  }
  out << '\n';
}

std::vector<double> parse_values(const std::string& line, std::size_t expect) {
  std::vector<double> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    out.push_back(std::strtod(tok.c_str(), &end));
    if (end != tok.c_str() + tok.size())
      throw ValidationError("bad number in binning spec: '" + tok + "'");
  }
  if (out.size() != expect)
    throw ValidationError("binning spec value count mismatch");
  return out;
}

}  // namespace

std::string serialize_binning(const BinningSpec& spec) {
  std::ostringstream out;
  out << "tabbin-binning v1\n";
  out << "method " << to_string(spec.method) << '\n';
  out << "T " << spec.requested_bins << '\n';
  out << "features " << spec.n_features() << '\n';
  for (int j = 0; j < spec.n_features(); ++j) {
    const auto& fb = spec.features[j];
    out << "feature " << j << ' ' << (fb.value_based ? "values" : "intervals")
        << ' ' << fb.bin_count << '\n';
    if (fb.value_based)
      write_values(out, fb.distinct_values);
    else
      write_values(out, fb.boundaries);
    write_values(out, fb.bin_means);
  }
  return out.str();
}

BinningSpec parse_binning(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw ValidationError("truncated binning spec");
    return line;
  };
  if (next_line() != "tabbin-binning v1")
    throw ValidationError("not a binning spec file (bad magic line)");

  BinningSpec spec;
  std::string word;
  {
    std::istringstream l(next_line());
    l >> word;
    std::string m;
    l >> m;
    if (word != "method") throw ValidationError("binning spec: expected 'method'");
    spec.method = bin_method_from_string(m);
  }
  {
    std::istringstream l(next_line());
    l >> word >> spec.requested_bins;
    if (word != "T") throw ValidationError("binning spec: expected 'T'");
  }
  int n_features = 0;
  {
    std::istringstream l(next_line());
    l >> word >> n_features;
    if (word != "features") throw ValidationError("binning spec: expected 'features'");
  }
  for (int j = 0; j < n_features; ++j) {
    std::istringstream l(next_line());
    int idx = 0, count = 0;
    std::string kind;
    l >> word >> idx >> kind >> count;
    if (word != "feature" || idx != j)
      throw ValidationError("binning spec: malformed feature header");
    FeatureBins fb;
    fb.bin_count = count;
    fb.value_based = kind == "values";
    if (fb.value_based)
      fb.distinct_values = parse_values(next_line(), static_cast<std::size_t>(count));
    else
      fb.boundaries = parse_values(next_line(), static_cast<std::size_t>(count) - 1);
    fb.bin_means = parse_values(next_line(), static_cast<std::size_t>(count));
    spec.features.push_back(std::move(fb));
  }
  return spec;
}

void save_binning(const BinningSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write binning spec: " + path);
  out << serialize_binning(spec);
}

BinningSpec load_binning(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open binning spec: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_binning(buf.str());
}

}  // namespace tabbin
