#include "tabbin/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tabbin/errors.hpp"
#include "tabbin/losses.hpp"
#include "tabbin/optimizer.hpp"
#include "tabbin/pca.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("mean of an empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double sq = 0.0;
  for (double x : v) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(v.size()));
}

bool metric_higher_is_better(TaskType task) {
  return task != TaskType::regression;
}

double relative_increase_percent(double value, double reference) {
  if (reference == 0.0)
    throw ValidationError("relative increase against a zero reference");
  return (value - reference) / reference * 100.0;
}

namespace {

std::vector<std::vector<int>> index_batches(int n, int batch, std::uint64_t seed,
                                            int epoch) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "head_batches", static_cast<std::uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch)
    batches.emplace_back(order.begin() + start,
                         order.begin() + std::min(n, start + batch));
  return batches;
}

void validate_probe(const ProbeConfig& probe) {
  if (probe.seeds < 1) throw ValidationError("probe needs at least one seed");
  if (probe.epochs < 0) throw ValidationError("probe epochs must be >= 0");
  if (probe.lr < 0.0 || !std::isfinite(probe.lr))
    throw ValidationError("probe learning rate must be finite and >= 0");
  if (probe.batch_size < 0) throw ValidationError("probe batch size must be >= 0");
}

struct SupervisedTargets {
  bool classification = false;
  std::vector<int> labels;  // classification, per dataset row
  Matrix values;            // regression (standardized) or bin indices, N x k
  int out_dim = 0;
};

// Joint training of (optional) encoder and affine head. When `encoder` is
// null only the head trains, i.e. a linear probe on fixed representations.
MlpNetwork train_head(MlpNetwork* encoder, const Matrix& inputs,
                      const std::vector<int>& train_rows,
                      const SupervisedTargets& targets, const ProbeConfig& probe,
                      std::uint64_t head_seed) {
  const int n_train = static_cast<int>(train_rows.size());
  const int batch =
      probe.batch_size > 0 ? probe.batch_size : batch_size_rule(n_train);
  const std::int64_t steps_per_epoch = (n_train + batch - 1) / batch;
  const std::int64_t total_steps = steps_per_epoch * probe.epochs;

  const int in_dim = encoder ? encoder->spec().input_dim : inputs.cols();
  const int rep_dim = encoder ? encoder->spec().output_dim : inputs.cols();
  if (inputs.cols() != in_dim)
    throw ValidationError("probe inputs do not match the encoder input width");

  Rng init_rng(derive_seed(head_seed, "head_init"));
  MlpNetwork head({rep_dim, {}, targets.out_dim}, init_rng);

  std::vector<ParamSpan> params;
  if (encoder) encoder->append_params(params);
  head.append_params(params);
  AdamWConfig opt_cfg;
  opt_cfg.lr = probe.lr;
  opt_cfg.weight_decay = probe.weight_decay;
  AdamW opt(std::move(params), opt_cfg);

  std::int64_t step = 0;
  for (int epoch = 0; epoch < probe.epochs; ++epoch) {
    for (const auto& batch_rows : index_batches(n_train, batch, head_seed, epoch)) {
      std::vector<int> rows(batch_rows.size());
      for (std::size_t i = 0; i < batch_rows.size(); ++i)
        rows[i] = train_rows[batch_rows[i]];

      const Matrix x = gather_rows(inputs, rows);
      ForwardCache enc_cache, head_cache;
      const Matrix z = encoder ? encoder->forward(x, &enc_cache) : x;
      const Matrix out = head.forward(z, &head_cache);

      LossResult loss;
      if (targets.classification) {
        std::vector<int> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) y[i] = targets.labels[rows[i]];
        loss = softmax_xent_loss(out, y);
      } else {
        loss = value_recon_loss(out, gather_rows(targets.values, rows));
      }
      if (!std::isfinite(loss.value))
        throw RuntimeFailure("non-finite probe loss at epoch " +
                             std::to_string(epoch));

      head.zero_grads();
      if (encoder) encoder->zero_grads();
      const Matrix gz = head.backward(head_cache, loss.grad);
      if (encoder) encoder->backward(enc_cache, gz);
      opt.step(cosine_lr(probe.lr, step, total_steps));
      ++step;
    }
  }
  return head;
}

// Frozen representations are whitened on train-split statistics before the
// affine head trains. Whitening composes with the head into the same affine
// hypothesis class, but the head's optimization no longer depends on the
// scale or correlation structure of whichever pretext produced the encoder.
// Directions with numerically zero variance are projected out.
Matrix whiten_frozen(const Matrix& z, const std::vector<int>& train_rows) {
  const int d = z.cols();
  const int n = static_cast<int>(train_rows.size());

  std::vector<double> mean(d, 0.0);
  for (int r : train_rows)
    for (int j = 0; j < d; ++j) mean[j] += z(r, j);
  for (double& m : mean) m /= n;

  Matrix centered(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) centered(i, j) = z(train_rows[i], j) - mean[j];
  Matrix cov = matmul_transpose_a(centered, centered);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cov(i, j) /= n;

  Matrix vecs;
  jacobi_eigen(cov, vecs);

  double trace = 0.0;
  for (int j = 0; j < d; ++j) trace += std::abs(cov(j, j));
  const double tol = trace > 0.0 ? trace * 1e-12 : 0.0;

  std::vector<int> order(d);
  for (int j = 0; j < d; ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return cov(a, a) > cov(b, b); });
  int kept = 0;
  while (kept < d && cov(order[kept], order[kept]) > tol) ++kept;

  // A fully constant representation keeps one zero axis so the head can
  // still fit its bias.
  if (kept == 0) return Matrix(z.rows(), 1);

  // projection = eigenvectors scaled by 1/sqrt(lambda), kept axes only
  Matrix proj(d, kept);
  for (int c = 0; c < kept; ++c) {
    const int j = order[c];
    const double scale = 1.0 / std::sqrt(cov(j, j));
    for (int k = 0; k < d; ++k) proj(k, c) = vecs(k, j) * scale;
  }

  Matrix shifted(z.rows(), d);
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < d; ++j) shifted(i, j) = z(i, j) - mean[j];
  return matmul(shifted, proj);
}

double classification_accuracy(const Matrix& logits, const std::vector<int>& labels) {
  int correct = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    int arg = 0;
    for (int t = 1; t < logits.cols(); ++t)
      if (logits(i, t) > logits(i, arg)) arg = t;
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / logits.rows();
}

SupervisedTargets supervised_targets(const Dataset& ds, const Standardizer& stdz) {
  SupervisedTargets t;
  if (ds.task == TaskType::regression) {
    t.classification = false;
    t.out_dim = 1;
    const auto ys = stdz.transform_labels(ds.labels);
    t.values = Matrix(ds.n_rows(), 1);
    for (int i = 0; i < ds.n_rows(); ++i) t.values(i, 0) = ys[i];
  } else {
    t.classification = true;
    t.out_dim = ds.num_classes;
    t.labels.resize(ds.n_rows());
    for (int i = 0; i < ds.n_rows(); ++i)
      t.labels[i] = static_cast<int>(ds.labels[i]);
    std::vector<bool> seen(ds.num_classes, false);
    for (int r : ds.rows_of(Split::train)) seen[t.labels[r]] = true;
    for (int c = 0; c < ds.num_classes; ++c)
      if (!seen[c])
        throw ValidationError("class " + std::to_string(c) +
                              " is absent from the train split");
  }
  return t;
}

void finalize(RunReport& report) {
  report.mean = mean_of(report.per_seed);
  report.stddev = stddev_of(report.per_seed);
  if (report.has_original_units) {
    report.mean_original = mean_of(report.per_seed_original);
    report.stddev_original = stddev_of(report.per_seed_original);
  }
}

// One probe/fine-tune seed: train, then score on the eval split.
void run_supervised_seed(RunReport& report, MlpNetwork* encoder_for_joint,
                         const Matrix& inputs, const Dataset& ds,
                         const Standardizer& stdz, const SupervisedTargets& targets,
                         const ProbeConfig& probe, std::uint64_t head_seed,
                         Split eval_split) {
  const auto train_rows = ds.rows_of(Split::train);
  const MlpNetwork head = train_head(encoder_for_joint, inputs, train_rows,
                                     targets, probe, head_seed);

  const auto eval_rows = ds.rows_of(eval_split);
  if (eval_rows.empty())
    throw ValidationError("evaluation split has no rows: " + to_string(eval_split));
  const Matrix x_eval = gather_rows(inputs, eval_rows);
  const Matrix z_eval =
      encoder_for_joint ? encoder_for_joint->forward(x_eval) : x_eval;
  const Matrix out = head.forward(z_eval);

  if (targets.classification) {
    std::vector<int> y(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i)
      y[i] = targets.labels[eval_rows[i]];
    report.per_seed.push_back(classification_accuracy(out, y));
  } else {
    double sq_std = 0.0, sq_orig = 0.0;
    for (std::size_t i = 0; i < eval_rows.size(); ++i) {
      const double pred = out(static_cast<int>(i), 0);
      const double diff = pred - targets.values(eval_rows[i], 0);
      sq_std += diff * diff;
      const double diff_orig = stdz.invert_label(pred) - ds.labels[eval_rows[i]];
      sq_orig += diff_orig * diff_orig;
    }
    report.per_seed.push_back(std::sqrt(sq_std / eval_rows.size()));
    report.per_seed_original.push_back(std::sqrt(sq_orig / eval_rows.size()));
  }
}

}  // namespace

RunReport linear_probe(const MlpNetwork& encoder, const Dataset& ds,
                       const Standardizer& stdz, const ProbeConfig& probe,
                       std::uint64_t seed, Split eval_split) {
  validate_probe(probe);
  const SupervisedTargets targets = supervised_targets(ds, stdz);

  // The encoder is frozen: representations are computed once, whitened, and
  // shared by every probe seed.
  const Matrix z_all = whiten_frozen(encoder.forward(stdz.transform(ds.features)),
                                     ds.rows_of(Split::train));

  RunReport report;
  report.name = "linear_probe";
  report.metric = targets.classification ? "accuracy" : "rmse";
  report.has_original_units = !targets.classification;
  for (int s = 0; s < probe.seeds; ++s)
    run_supervised_seed(report, nullptr, z_all, ds, stdz, targets, probe,
                        derive_seed(seed, "probe", static_cast<std::uint64_t>(s)),
                        eval_split);
  finalize(report);
  return report;
}

RunReport finetune(const MlpNetwork& encoder, const Dataset& ds,
                   const Standardizer& stdz, const ProbeConfig& probe,
                   std::uint64_t seed, Split eval_split) {
  validate_probe(probe);
  const SupervisedTargets targets = supervised_targets(ds, stdz);
  const Matrix x_std = stdz.transform(ds.features);

  RunReport report;
  report.name = "finetune";
  report.metric = targets.classification ? "accuracy" : "rmse";
  report.has_original_units = !targets.classification;
  for (int s = 0; s < probe.seeds; ++s) {
    MlpNetwork tuned = encoder;  // each seed starts from the pretrained weights
    run_supervised_seed(report, &tuned, x_std, ds, stdz, targets, probe,
                        derive_seed(seed, "finetune", static_cast<std::uint64_t>(s)),
                        eval_split);
  }
  finalize(report);
  return report;
}

RunReport bin_prediction_probe(const MlpNetwork& encoder, const Dataset& ds,
                               const Standardizer& stdz,
                               const BinningSpec& binning,
                               const ProbeConfig& probe, std::uint64_t seed,
                               Split eval_split) {
  validate_probe(probe);
  // Unlike linear_probe, representations are taken as-is: the diagnostic asks
  // how prominently the raw representation geometry encodes bin structure,
  // so rescaling would hide exactly the property being measured.
  const Matrix z_all = encoder.forward(stdz.transform(ds.features));
  const IntMatrix idx = assign_bins_matrix(ds.features, binning);

  SupervisedTargets targets;
  targets.classification = false;
  targets.out_dim = ds.n_features();
  targets.values = Matrix(ds.n_rows(), ds.n_features());
  for (int i = 0; i < ds.n_rows(); ++i)
    for (int j = 0; j < ds.n_features(); ++j) targets.values(i, j) = idx(i, j);

  const auto train_rows = ds.rows_of(Split::train);
  const auto eval_rows = ds.rows_of(eval_split);

  RunReport report;
  report.name = "bin_prediction";
  report.metric = "mse";
  for (int s = 0; s < probe.seeds; ++s) {
    const MlpNetwork head = train_head(
        nullptr, z_all, train_rows, targets, probe,
        derive_seed(seed, "bin_probe", static_cast<std::uint64_t>(s)));
    const Matrix out = head.forward(gather_rows(z_all, eval_rows));
    // Same reduction as the bin reconstruction loss: sum over features,
    // mean over samples.
    double sq = 0.0;
    for (int i = 0; i < out.rows(); ++i)
      for (int j = 0; j < out.cols(); ++j) {
        const double diff = out(i, j) - targets.values(eval_rows[i], j);
        sq += diff * diff;
      }
    report.per_seed.push_back(sq / eval_rows.size());
  }
  finalize(report);
  return report;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["metric"] = report.metric;
  j["per_seed"] = report.per_seed;
  j["mean"] = report.mean;
  j["stddev"] = report.stddev;
  if (report.has_original_units) {
    j["per_seed_original_units"] = report.per_seed_original;
    j["mean_original_units"] = report.mean_original;
    j["stddev_original_units"] = report.stddev_original;
  }
  j["provenance"] = report.provenance;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const RunReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "seed," << report.metric;
  if (report.has_original_units) out << ',' << report.metric << "_original";
  out << '\n';
  for (std::size_t s = 0; s < report.per_seed.size(); ++s) {
    out << s << ',' << report.per_seed[s];
    if (report.has_original_units) out << ',' << report.per_seed_original[s];
    out << '\n';
  }
  out << "mean," << report.mean;
  if (report.has_original_units) out << ',' << report.mean_original;
  out << '\n';
  out << "stddev," << report.stddev;
  if (report.has_original_units) out << ',' << report.stddev_original;
  out << '\n';
  return out.str();
}

void write_report(const RunReport& report, const std::string& json_path,
                  const std::string& csv_path) {
  std::ofstream j(json_path, std::ios::binary);
  if (!j) throw RuntimeFailure("cannot write report: " + json_path);
  j << report_to_json(report);
  std::ofstream c(csv_path, std::ios::binary);
  if (!c) throw RuntimeFailure("cannot write report: " + csv_path);
  c << report_to_csv(report);
}

}  // namespace tabbin
