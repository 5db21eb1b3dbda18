// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line on stdout; progress for the long-running experiment goes to stderr.
// The process exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tabbin/binning.hpp"
#include "tabbin/checkpoint.hpp"
#include "tabbin/corruption.hpp"
#include "tabbin/dataset.hpp"
#include "tabbin/errors.hpp"
#include "tabbin/evaluate.hpp"
#include "tabbin/gradcheck.hpp"
#include "tabbin/losses.hpp"
#include "tabbin/mlp.hpp"
#include "tabbin/rng.hpp"
#include "tabbin/standardize.hpp"
#include "tabbin/synthetic.hpp"
#include "tabbin/train.hpp"

namespace fs = std::filesystem;
using namespace tabbin;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// ------------------------------------------------------------ criterion 1

// Smallest |pre-activation| across the hidden layers. Central differences
// are only meaningful where the network is smooth, so gradcheck inputs must
// keep every ReLU argument away from zero by more than the step size.
double hidden_margin(const MlpNetwork& net, const Matrix& x) {
  ForwardCache cache;
  net.forward(x, &cache);
  double margin = 1e300;
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
    const Matrix& z = cache.pre[l];
    for (int i = 0; i < z.rows(); ++i)
      for (int j = 0; j < z.cols(); ++j)
        margin = std::min(margin, std::fabs(z(i, j)));
  }
  return margin;
}

// Analytic gradients against central differences for every trainable
// component and every loss, 20 random instances each.
bool criterion1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int instances = 0;

  // Full networks (dense stacks with ReLU): parameter and input gradients
  // through the squared-error pipeline.
  for (int k = 0; k < 20; ++k) {
    Rng rng(900 + k);
    const int d_in = 2 + k % 4;
    const int d_out = 2 + (k + 1) % 3;
    const int n = 2 + k % 5;
    const std::vector<int> hidden(1 + k % 2, 3 + k % 5);
    MlpNetwork net({d_in, hidden, d_out}, rng);
    Matrix x = random_matrix(n, d_in, rng);
    for (int attempt = 0; hidden_margin(net, x) < 1e-3 && attempt < 100;
         ++attempt)
      x = random_matrix(n, d_in, rng);
    const Matrix target = random_matrix(n, d_out, rng);

    net.zero_grads();
    ForwardCache cache;
    const LossResult loss = value_recon_loss(net.forward(x, &cache), target);
    Matrix gx = net.backward(cache, loss.grad);

    std::vector<ParamSpan> params;
    net.append_params(params);
    params.push_back({x.data(), gx.data(), x.size()});
    worst = std::max(worst, max_grad_rel_error(params, [&]() {
      return value_recon_loss(net.forward(x), target).value;
    }));
    ++instances;
  }

  // Shared per-feature heads through the per-bin cross-entropy.
  for (int k = 0; k < 20; ++k) {
    Rng rng(940 + k);
    const int f = 1 + k % 4;
    const int e = 1 + (k + 1) % 4;
    const int t = 2 + k % 4;
    const int n = 2 + k % 3;
    PerFeatureHead head(f, e, t, rng);
    Matrix x = random_matrix(n, f * e, rng);
    IntMatrix idx(n, f);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < f; ++j)
        idx(i, j) = 1 + static_cast<int>(rng.uniform_int(t));
    const Matrix target = one_hot_matrix(idx, t);

    head.zero_grads();
    ForwardCache cache;
    const LossResult loss = bin_xent_loss(head.forward(x, &cache), target, t);
    Matrix gx = head.backward(cache, loss.grad);

    std::vector<ParamSpan> params;
    head.append_params(params);
    params.push_back({x.data(), gx.data(), x.size()});
    worst = std::max(worst, max_grad_rel_error(params, [&]() {
      return bin_xent_loss(head.forward(x), target, t).value;
    }));
    ++instances;
  }

  // Each loss's gradient with respect to its predictions/logits.
  for (int k = 0; k < 20; ++k) {
    Rng rng(980 + k);
    const int n = 2 + k % 5;
    const int d = 1 + k % 6;
    const int t = 2 + k % 5;

    {
      Matrix pred = random_matrix(n, d, rng);
      const Matrix target = random_matrix(n, d, rng);
      LossResult r = value_recon_loss(pred, target);
      const std::vector<ParamSpan> span{{pred.data(), r.grad.data(), pred.size()}};
      worst = std::max(worst, max_grad_rel_error(span, [&]() {
        return value_recon_loss(pred, target).value;
      }));
      ++instances;
    }
    {
      Matrix pred = random_matrix(n, d, rng);
      Matrix target(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
          target(i, j) = 1.0 + static_cast<double>(rng.uniform_int(t));
      LossResult r = bin_recon_loss(pred, target);
      const std::vector<ParamSpan> span{{pred.data(), r.grad.data(), pred.size()}};
      worst = std::max(worst, max_grad_rel_error(span, [&]() {
        return bin_recon_loss(pred, target).value;
      }));
      ++instances;
    }
    {
      Matrix logits = random_matrix(n, d, rng, 2.0);
      Matrix mask(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) mask(i, j) = rng.bernoulli(0.4) ? 1.0 : 0.0;
      LossResult r = mask_xent_loss(logits, mask);
      const std::vector<ParamSpan> span{{logits.data(), r.grad.data(), logits.size()}};
      worst = std::max(worst, max_grad_rel_error(span, [&]() {
        return mask_xent_loss(logits, mask).value;
      }));
      ++instances;
    }
    {
      Matrix logits = random_matrix(n, d * t, rng, 2.0);
      IntMatrix idx(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
          idx(i, j) = 1 + static_cast<int>(rng.uniform_int(t));
      const Matrix target = one_hot_matrix(idx, t);
      LossResult r = bin_xent_loss(logits, target, t);
      const std::vector<ParamSpan> span{{logits.data(), r.grad.data(), logits.size()}};
      worst = std::max(worst, max_grad_rel_error(span, [&]() {
        return bin_xent_loss(logits, target, t).value;
      }));
      ++instances;
    }
    {
      const int classes = 2 + k % 4;
      Matrix logits = random_matrix(n, classes, rng, 2.0);
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i)
        labels[i] = static_cast<int>(rng.uniform_int(classes));
      LossResult r = softmax_xent_loss(logits, labels);
      const std::vector<ParamSpan> span{{logits.data(), r.grad.data(), logits.size()}};
      worst = std::max(worst, max_grad_rel_error(span, [&]() {
        return softmax_xent_loss(logits, labels).value;
      }));
      ++instances;
    }
  }

  const double secs = seconds_since(t0);
  std::ostringstream out;
  out << "analytic gradients match central differences (worst rel err "
      << worst << " over " << instances << " random instances, "
      << secs << "s)";
  detail = out.str();
  return worst <= 1e-5 && secs < 30.0;
}

// ------------------------------------------------------------ criterion 2

bool criterion2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;

  // Equal counts whenever T divides n and values are distinct.
  for (const int t : {2, 4, 5, 10}) {
    Rng rng(100 + t);
    const int n = 200;
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = i + 0.4 * rng.uniform();
    for (int i = n - 1; i > 0; --i)
      std::swap(col[i], col[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
    const FeatureBins fb = fit_quantile_bins(col, t);
    ok = ok && fb.bin_count == t;
    std::vector<int> counts(t, 0);
    for (double v : col) ++counts[fb.assign(v) - 1];
    for (int b = 0; b < t; ++b) ok = ok && counts[b] == n / t;
  }

  // Heavily tied sparse column falls back to one bin per distinct value.
  const FeatureBins sparse = fit_quantile_bins({1.0, 1.0, 2.0}, 5);
  ok = ok && sparse.value_based && sparse.bin_count == 2;

  // Strictly increasing transforms leave assignments unchanged.
  {
    Rng rng(77);
    std::vector<double> col(120);
    for (auto& v : col) v = rng.normal();
    const FeatureBins raw = fit_quantile_bins(col, 7);

    std::vector<double> expd(col.size()), affine(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
      expd[i] = std::exp(col[i]);
      affine[i] = 3.0 * expd[i] - 7.0;
    }
    const FeatureBins fb_exp = fit_quantile_bins(expd, 7);
    const FeatureBins fb_aff = fit_quantile_bins(affine, 7);
    for (std::size_t i = 0; i < col.size(); ++i) {
      const int want = raw.assign(col[i]);
      ok = ok && fb_exp.assign(expd[i]) == want;
      ok = ok && fb_aff.assign(affine[i]) == want;
    }
  }

  // One-hot encoding round-trips through argmax.
  {
    Rng rng(88);
    const int t = 6;
    std::vector<int> idx(50);
    for (auto& v : idx) v = 1 + static_cast<int>(rng.uniform_int(t));
    const Matrix m = one_hot(idx, t);
    for (int i = 0; i < m.rows(); ++i) {
      int arg = 0;
      double sum = 0.0;
      for (int c = 0; c < t; ++c) {
        sum += m(i, c);
        if (m(i, c) > m(i, arg)) arg = c;
      }
      ok = ok && arg + 1 == idx[i] && sum == 1.0;
    }
  }

  const double secs = seconds_since(t0);
  std::ostringstream out;
  out << "quantile equal counts, sparse per-value fallback, monotone "
         "invariance, one-hot round trip ("
      << secs << "s)";
  detail = out.str();
  return ok && secs < 10.0;
}

// ------------------------------------------------------------ criterion 3

bool criterion3(std::string& detail) {
  bool ok = true;
  double worst_mask = 0.0, worst_bin = 0.0;

  // Zero logits make the mask head maximally uncertain: d * ln 2.
  for (int k = 0; k < 5; ++k) {
    Rng rng(300 + k);
    const int n = 2 + k;
    const int d = 1 + 2 * k;
    const Matrix logits(n, d);
    Matrix mask(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) mask(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double got = mask_xent_loss(logits, mask).value;
    worst_mask = std::max(worst_mask, std::abs(got - d * std::log(2.0)));
  }
  ok = ok && worst_mask <= 1e-12;

  // Uniform logits under the per-bin cross-entropy give ln T.
  for (int k = 0; k < 5; ++k) {
    Rng rng(320 + k);
    const int n = 2 + k;
    const int d = 1 + k;
    const int t = 2 + 2 * k;
    Matrix logits(n, d * t);
    const double c = rng.normal();  // any constant per block
    logits.fill(c);
    IntMatrix idx(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        idx(i, j) = 1 + static_cast<int>(rng.uniform_int(t));
    const double got = bin_xent_loss(logits, one_hot_matrix(idx, t), t).value;
    worst_bin = std::max(worst_bin, std::abs(got - std::log(t)));
  }
  ok = ok && worst_bin <= 1e-12;

  // One row predicting (3, 4) against zero targets: 3^2 + 4^2 exactly.
  Matrix pred(1, 2);
  pred(0, 0) = 3.0;
  pred(0, 1) = 4.0;
  const LossResult sq = value_recon_loss(pred, Matrix(1, 2));
  ok = ok && sq.value == 25.0 && sq.grad(0, 0) == 6.0 && sq.grad(0, 1) == 8.0;

  std::ostringstream out;
  out << "closed-form losses (mask deviation " << worst_mask
      << ", bin-xent deviation " << worst_bin << ", squared error exactly 25)";
  detail = out.str();
  return ok;
}

// ------------------------------------------------------------ criterion 4

bool criterion4(std::string& detail) {
  bool ok = true;

  // p_m = 0 is a bitwise no-op with an all-zero mask.
  {
    Rng data_rng(400);
    const Matrix x = random_matrix(40, 5, data_rng);
    CorruptionConfig cfg;
    cfg.p_m = 0.0;
    cfg.mode = ReplacementMode::random;
    Rng rng(401);
    const CorruptedBatch cb = corrupt(x, cfg, rng);
    ok = ok && bitwise_equal(cb.corrupted, x);
    for (int i = 0; i < cb.mask.rows(); ++i)
      for (int j = 0; j < cb.mask.cols(); ++j) ok = ok && cb.mask(i, j) == 0.0;
  }

  // p_m = 1 with constant replacement rewrites every cell to the constant.
  {
    Rng data_rng(402);
    const Matrix x = random_matrix(30, 4, data_rng);
    CorruptionConfig cfg;
    cfg.p_m = 1.0;
    cfg.mode = ReplacementMode::constant;
    cfg.constant_vector = {1.5, -2.0, 0.0, 9.25};
    Rng rng(403);
    const CorruptedBatch cb = corrupt(x, cfg, rng);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j) {
        ok = ok && cb.corrupted(i, j) == cfg.constant_vector[j];
        ok = ok && cb.mask(i, j) == 1.0;
      }
  }

  // Mask rate concentrates near p_m over 1e5 draws.
  double rate = 0.0;
  {
    Rng rng(404);
    const Matrix mask = sample_mask(200, 500, 0.3, rng);
    double sum = 0.0;
    for (int i = 0; i < mask.rows(); ++i)
      for (int j = 0; j < mask.cols(); ++j) sum += mask(i, j);
    rate = sum / (200.0 * 500.0);
    ok = ok && std::abs(rate - 0.3) <= 0.01;
  }

  // Random replacement only ever copies in-batch, same-column values, and
  // unmasked cells pass through bitwise.
  for (int trial = 0; trial < 100; ++trial) {
    Rng data_rng(500 + trial);
    const int n = 2 + trial % 30;
    const int d = 1 + trial % 6;
    const Matrix x = random_matrix(n, d, data_rng);
    CorruptionConfig cfg;
    cfg.p_m = 0.5;
    cfg.mode = ReplacementMode::random;
    Rng rng(600 + trial);
    const CorruptedBatch cb = corrupt(x, cfg, rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        if (cb.mask(i, j) == 0.0) {
          ok = ok && cb.corrupted(i, j) == x(i, j);
          continue;
        }
        bool member = false;
        for (int r = 0; r < n && !member; ++r)
          member = cb.corrupted(i, j) == x(r, j);
        ok = ok && member;
      }
  }

  std::ostringstream out;
  out << "corruption edges, donor membership, mask rate " << rate
      << " at p_m=0.3";
  detail = out.str();
  return ok;
}

// ----------------------------------------------------- criteria 5, 6, 7, 8

// One meta-rep of the synthetic protocol: pretrain value- and bin-target
// reconstruction on the same features, probe on regression and
// classification labels; optionally the bin-average ablation and the
// bin-prediction diagnostic.
struct RepResult {
  double rmse_value = 0, rmse_bin = 0, rmse_abl = 0;
  double acc_value = 0, acc_bin = 0;
  double bp_value = 0, bp_bin = 0;
  double secs_c5 = 0, secs_c6 = 0, secs_c7 = 0;
  std::string value_ck, bin_ck;
  std::vector<std::string> value_log, bin_log;
  std::vector<std::string> reports;  // json+csv for the four probes
};

RepResult run_protocol_rep(int rep, bool full, const fs::path& scratch) {
  RepResult r;

  SyntheticConfig sc;
  sc.seed = 1000 + rep;
  Dataset ds = make_synthetic(sc);
  assign_splits_ratio(ds, 0.64, 0.16, 0.2, 500 + rep);
  compute_feature_meta(ds);
  const Standardizer stdz = Standardizer::fit(ds);
  const BinningSpec binning = fit_binning(ds, BinMethod::quantile, 10);

  SyntheticConfig scc = sc;
  scc.classification = true;
  Dataset dsc = make_synthetic(scc);
  assign_splits_ratio(dsc, 0.64, 0.16, 0.2, 500 + rep);
  compute_feature_meta(dsc);

  SslRunConfig base;
  base.depth = 2;
  base.width = 144;
  base.epochs = 200;
  base.base_lr = 7e-4;
  base.weight_decay = 0.0;
  base.seed = static_cast<std::uint64_t>(rep);

  SslRunConfig cv = base;
  cv.losses = {{SslObjective::value_recon, 1.0}};
  SslRunConfig cb = base;
  cb.losses = {{SslObjective::bin_recon, 1.0}};

  const auto t5 = std::chrono::steady_clock::now();
  const PretrainResult mv = pretrain(ds, stdz, nullptr, cv);
  const PretrainResult mb = pretrain(ds, stdz, &binning, cb);

  ProbeConfig probe;
  probe.seeds = 5;
  const RunReport rv = linear_probe(mv.model.encoder, ds, stdz, probe, 0);
  const RunReport rb = linear_probe(mb.model.encoder, ds, stdz, probe, 0);
  const RunReport av = linear_probe(mv.model.encoder, dsc, stdz, probe, 0);
  const RunReport ab = linear_probe(mb.model.encoder, dsc, stdz, probe, 0);
  r.secs_c5 = seconds_since(t5);
  r.rmse_value = rv.mean;
  r.rmse_bin = rb.mean;
  r.acc_value = av.mean;
  r.acc_bin = ab.mean;

  if (full) {
    const auto t6 = std::chrono::steady_clock::now();
    SslRunConfig ca = cb;
    ca.ablation = BinAblation::bin_averages;
    const PretrainResult ma = pretrain(ds, stdz, &binning, ca);
    const RunReport ra = linear_probe(ma.model.encoder, ds, stdz, probe, 0);
    r.secs_c6 = seconds_since(t6);
    r.rmse_abl = ra.mean;

    const auto t7 = std::chrono::steady_clock::now();
    const RunReport bpv =
        bin_prediction_probe(mv.model.encoder, ds, stdz, binning, probe, 0);
    const RunReport bpb =
        bin_prediction_probe(mb.model.encoder, ds, stdz, binning, probe, 0);
    r.secs_c7 = seconds_since(t7);
    r.bp_value = bpv.mean;
    r.bp_bin = bpb.mean;
  }

  const fs::path vp = scratch / ("rep" + std::to_string(rep) + "_value.tbck");
  const fs::path bp = scratch / ("rep" + std::to_string(rep) + "_bin.tbck");
  save_model(mv.model, vp.string());
  save_model(mb.model, bp.string());
  r.value_ck = slurp(vp);
  r.bin_ck = slurp(bp);
  r.value_log = mv.log;
  r.bin_log = mb.log;
  for (const RunReport* rep_ptr : {&rv, &rb, &av, &ab}) {
    r.reports.push_back(report_to_json(*rep_ptr));
    r.reports.push_back(report_to_csv(*rep_ptr));
  }
  return r;
}

std::vector<std::string> strip_wall(const std::vector<std::string>& log) {
  std::vector<std::string> out;
  out.reserve(log.size());
  for (const auto& line : log) {
    const auto cut = line.find(" wall_ms=");
    out.push_back(cut == std::string::npos ? line : line.substr(0, cut));
  }
  return out;
}

// ------------------------------------------------------------ criterion 9

bool criterion9(std::string& detail) {
  bool ok = true;
  ok = ok && batch_size_rule(6400) == 256;
  ok = ok && batch_size_rule(62751) == 1024;
  ok = ok && batch_size_rule(3732) == 128;

  ok = ok && batch_size_rule(1) == 64 && batch_size_rule(999) == 64;
  ok = ok && batch_size_rule(1000) == 128 && batch_size_rule(4999) == 128;
  ok = ok && batch_size_rule(5000) == 256 && batch_size_rule(9999) == 256;
  ok = ok && batch_size_rule(10000) == 512 && batch_size_rule(49999) == 512;
  ok = ok && batch_size_rule(50000) == 1024 && batch_size_rule(1000000) == 1024;

  int prev = 0;
  for (int n = 1; n <= 60000; n += 7) {
    const int b = batch_size_rule(n);
    ok = ok && b >= prev;
    prev = b;
  }

  bool threw = false;
  try {
    batch_size_rule(0);
  } catch (const ValidationError&) {
    threw = true;
  }
  ok = ok && threw;

  detail = "batch-size rule anchors (6400->256, 62751->1024, 3732->128) and "
           "bracket edges";
  return ok;
}

// ----------------------------------------------------------- criterion 10

bool criterion10(std::string& detail, const fs::path& scratch) {
  bool ok = true;
  for (int k = 0; k < 10; ++k) {
    Rng rng(700 + k);
    const int d_in = 2 + k % 5;
    const int d_out = 1 + (k + 2) % 4;
    std::vector<int> hidden;
    for (int l = 0; l < k % 3; ++l) hidden.push_back(3 + (k + l) % 6);
    const MlpSpec spec{d_in, hidden, d_out};

    MlpNetwork original(spec, rng);
    const fs::path path = scratch / ("net" + std::to_string(k) + ".tbck");
    save_checkpoint(path.string(), {&original.layers()});

    Rng other_rng(7000 + k);
    MlpNetwork restored(spec, other_rng);
    load_checkpoint(path.string(), {&restored.layers()});

    const Matrix x = random_matrix(4 + k % 3, d_in, rng);
    ok = ok && bitwise_equal(original.forward(x), restored.forward(x));
  }
  detail = "checkpoints restore bit-identical forward passes on 10 random "
           "networks";
  return ok;
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "tabbin_acceptance";
  fs::create_directories(scratch);
  std::string detail;

  report(1, criterion1(detail), detail);
  report(2, criterion2(detail), detail);
  report(3, criterion3(detail), detail);
  report(4, criterion4(detail), detail);

  // The synthetic experiment behind criteria 5-7, five meta-reps.
  int joint = 0, abl_degrade = 0, binpred = 0;
  double secs5 = 0, secs6 = 0, secs7 = 0;
  std::vector<RepResult> reps;
  for (int rep = 0; rep < 5; ++rep) {
    reps.push_back(run_protocol_rep(rep, true, scratch));
    const RepResult& r = reps.back();
    const bool w_rmse = r.rmse_bin < r.rmse_value;
    const bool w_acc = r.acc_bin > r.acc_value;
    const bool w_abl = r.rmse_abl > r.rmse_bin;
    const bool w_bp = r.bp_value > r.bp_bin;
    joint += (w_rmse && w_acc);
    abl_degrade += w_abl;
    binpred += w_bp;
    secs5 += r.secs_c5;
    secs6 += r.secs_c6;
    secs7 += r.secs_c7;
    std::fprintf(stderr,
                 "rep %d: rmse value=%.4f bin=%.4f abl=%.4f | acc value=%.4f "
                 "bin=%.4f | bin-pred value=%.2f bin=%.2f | %s%s%s%s\n",
                 rep, r.rmse_value, r.rmse_bin, r.rmse_abl, r.acc_value,
                 r.acc_bin, r.bp_value, r.bp_bin, w_rmse ? "R" : "-",
                 w_acc ? "A" : "-", w_abl ? "D" : "-", w_bp ? "B" : "-");
    std::fflush(stderr);
  }

  {
    std::ostringstream out;
    out << "bin-target reconstruction beats value reconstruction on probes "
           "(rmse and accuracy jointly) in "
        << joint << "/5 reps (" << secs5 << "s)";
    report(5, joint >= 4 && secs5 < 600.0, out.str());
  }
  {
    std::ostringstream out;
    out << "bin-average targets degrade the regression probe in "
        << abl_degrade << "/5 reps (" << secs6 << "s)";
    report(6, abl_degrade >= 4, out.str());
  }
  {
    std::ostringstream out;
    out << "value-reconstruction features predict bin indices worse in "
        << binpred << "/5 reps (" << secs7 << "s)";
    report(7, binpred >= 4, out.str());
  }

  // Criterion 8: rerun rep 0 with identical seeds and compare artifacts.
  {
    const fs::path rerun_dir = scratch / "rerun";
    fs::create_directories(rerun_dir);
    const RepResult again = run_protocol_rep(0, false, rerun_dir);
    const RepResult& first = reps[0];
    bool ok = !first.value_ck.empty() && first.value_ck == again.value_ck &&
              !first.bin_ck.empty() && first.bin_ck == again.bin_ck;
    ok = ok && strip_wall(first.value_log) == strip_wall(again.value_log);
    ok = ok && strip_wall(first.bin_log) == strip_wall(again.bin_log);
    ok = ok && first.reports == again.reports;
    report(8, ok,
           "identical seeds reproduce checkpoints, logs (wall time aside), "
           "and probe reports byte-for-byte");
  }

  report(9, criterion9(detail), detail);
  report(10, criterion10(detail, scratch), detail);

  return failures;
}
