#include "tabbin/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "tabbin/checkpoint.hpp"
#include "tabbin/errors.hpp"
#include "tabbin/losses.hpp"
#include "tabbin/optimizer.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

SslObjective objective_from_string(const std::string& s) {
  if (s == "value_recon") return SslObjective::value_recon;
  if (s == "mask_xent") return SslObjective::mask_xent;
  if (s == "bin_recon") return SslObjective::bin_recon;
  if (s == "bin_xent") return SslObjective::bin_xent;
  throw ValidationError("unknown objective: '" + s + "'");
}

std::string to_string(SslObjective o) {
  switch (o) {
    case SslObjective::value_recon: return "value_recon";
    case SslObjective::mask_xent: return "mask_xent";
    case SslObjective::bin_recon: return "bin_recon";
    case SslObjective::bin_xent: return "bin_xent";
  }
  return "?";
}

void SslModel::zero_grads() {
  encoder.zero_grads();
  for (auto& d : decoders) d.zero_grads();
  for (auto& h : heads)
    if (h) h->zero_grads();
}

std::vector<ParamSpan> SslModel::all_params() {
  std::vector<ParamSpan> out;
  encoder.append_params(out);
  for (std::size_t k = 0; k < decoders.size(); ++k) {
    decoders[k].append_params(out);
    if (heads[k]) heads[k]->append_params(out);
  }
  return out;
}

std::vector<const std::vector<DenseLayer>*> SslModel::checkpoint_networks() const {
  std::vector<const std::vector<DenseLayer>*> out;
  out.push_back(&encoder.layers());
  for (std::size_t k = 0; k < decoders.size(); ++k) {
    out.push_back(&decoders[k].layers());
    if (heads[k]) out.push_back(&heads[k]->layers());
  }
  return out;
}

std::vector<std::vector<DenseLayer>*> SslModel::checkpoint_networks() {
  std::vector<std::vector<DenseLayer>*> out;
  out.push_back(&encoder.layers());
  for (std::size_t k = 0; k < decoders.size(); ++k) {
    out.push_back(&decoders[k].layers());
    if (heads[k]) out.push_back(&heads[k]->layers());
  }
  return out;
}

bool needs_binning(const SslRunConfig& cfg) {
  for (const auto& t : cfg.losses)
    if (t.objective == SslObjective::bin_recon ||
        t.objective == SslObjective::bin_xent)
      return true;
  return false;
}

namespace {

void validate_config(const SslRunConfig& cfg) {
  if (cfg.losses.empty()) throw ValidationError("at least one loss term required");
  for (const auto& t : cfg.losses)
    if (!std::isfinite(t.weight) || t.weight < 0.0)
      throw ValidationError("loss weights must be finite and non-negative");
  if (cfg.depth < 0) throw ValidationError("depth must be >= 0");
  if (cfg.width < 1) throw ValidationError("width must be >= 1");
  if (cfg.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (cfg.batch_size < 0) throw ValidationError("batch size must be >= 0");
  if (cfg.base_lr < 0.0 || !std::isfinite(cfg.base_lr))
    throw ValidationError("learning rate must be finite and >= 0");
  if (cfg.weight_decay < 0.0 || !std::isfinite(cfg.weight_decay))
    throw ValidationError("weight decay must be finite and >= 0");
  for (const auto& t : cfg.losses)
    if (t.objective == SslObjective::bin_xent && cfg.head_embed < 1)
      throw ValidationError("head_embed must be >= 1 for bin_xent");
}

int decoder_output_dim(SslObjective o, int d, int head_embed) {
  switch (o) {
    case SslObjective::value_recon:
    case SslObjective::mask_xent:
    case SslObjective::bin_recon:
      return d;
    case SslObjective::bin_xent:
      return d * head_embed;
  }
  return d;
}

}  // namespace

SslModel build_ssl_model(int n_features, const SslRunConfig& cfg, int bin_count) {
  validate_config(cfg);
  if (n_features < 1) throw ValidationError("model needs at least one feature");
  if (needs_binning(cfg) && bin_count < 1)
    throw ValidationError("bin objectives need a positive bin count");

  Rng init_rng(derive_seed(cfg.seed, "init"));
  const std::vector<int> hidden(static_cast<std::size_t>(cfg.depth), cfg.width);

  SslModel model;
  model.losses = cfg.losses;
  model.bin_count = bin_count;
  model.encoder = MlpNetwork({n_features, hidden, cfg.width}, init_rng);
  for (const auto& term : cfg.losses) {
    const int out = decoder_output_dim(term.objective, n_features, cfg.head_embed);
    model.decoders.emplace_back(MlpSpec{cfg.width, hidden, out}, init_rng);
    if (term.objective == SslObjective::bin_xent)
      model.heads.emplace_back(
          PerFeatureHead(n_features, cfg.head_embed, bin_count, init_rng));
    else
      model.heads.emplace_back(std::nullopt);
  }
  return model;
}

void save_model(const SslModel& model, const std::string& path) {
  save_checkpoint(path, model.checkpoint_networks());
}

void load_model(SslModel& model, const std::string& path) {
  load_checkpoint(path, model.checkpoint_networks());
}

PretrainResult pretrain(const Dataset& ds, const Standardizer& stdz,
                        const BinningSpec* binning, const SslRunConfig& cfg) {
  validate_config(cfg);
  const int d = ds.n_features();
  const Matrix x_std = stdz.transform(ds.features);

  bool have_bin_recon = false, have_bin_xent = false;
  for (const auto& t : cfg.losses) {
    have_bin_recon |= t.objective == SslObjective::bin_recon;
    have_bin_xent |= t.objective == SslObjective::bin_xent;
  }

  // Resolve the effective binning: the fitted spec as-is, or the per-value
  // refit when that ablation is active.
  BinningSpec effective;
  int t_eff = 0;
  if (have_bin_recon || have_bin_xent) {
    if (binning == nullptr)
      throw ValidationError(
          "bin_recon/bin_xent need a fitted binning spec; run the bin step first");
    if (binning->n_features() != d)
      throw ValidationError("binning spec is for a different feature count");
    effective = cfg.ablation == BinAblation::per_value
                    ? fit_binning(ds, BinMethod::per_value, 2)
                    : *binning;
    t_eff = effective.max_bins();
  }

  Matrix bin_numeric;
  IntMatrix bin_idx;
  if (have_bin_recon || have_bin_xent) {
    const BinAblation abl =
        cfg.ablation == BinAblation::per_value ? BinAblation::none : cfg.ablation;
    bin_numeric = bin_targets(ds.features, effective, abl, cfg.seed);
    if (have_bin_xent) {
      if (cfg.ablation == BinAblation::bin_averages)
        throw ValidationError(
            "the bin_averages ablation has no class targets; it applies to "
            "bin_recon only");
      bin_idx = assign_bins_matrix(ds.features, effective);
      if (cfg.ablation == BinAblation::shuffle_order)
        for (int i = 0; i < bin_idx.rows(); ++i)
          for (int j = 0; j < bin_idx.cols(); ++j)
            bin_idx(i, j) = static_cast<int>(std::llround(bin_numeric(i, j)));
    }
  }

  CorruptionConfig corruption = cfg.corruption;
  if (corruption.mode == ReplacementMode::constant &&
      corruption.constant_vector.empty()) {
    // Train means of the standardized features (zero up to rounding).
    const auto train_rows = ds.rows_of(Split::train);
    corruption.constant_vector.assign(d, 0.0);
    for (int r : train_rows)
      for (int j = 0; j < d; ++j) corruption.constant_vector[j] += x_std(r, j);
    for (auto& v : corruption.constant_vector)
      v /= static_cast<double>(train_rows.size());
  }

  PretrainResult result;
  result.model = build_ssl_model(d, cfg, t_eff);
  SslModel& model = result.model;

  const int n_train = static_cast<int>(ds.rows_of(Split::train).size());
  const int batch = cfg.batch_size > 0 ? cfg.batch_size : batch_size_rule(n_train);
  const std::int64_t steps_per_epoch = (n_train + batch - 1) / batch;
  const std::int64_t total_steps = steps_per_epoch * cfg.epochs;

  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.base_lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW optimizer(model.all_params(), opt_cfg);

  const std::size_t n_terms = cfg.losses.size();
  std::vector<double> weights(n_terms);
  std::vector<std::string> term_labels(n_terms);
  for (std::size_t k = 0; k < n_terms; ++k) {
    weights[k] = cfg.losses[k].weight;
    term_labels[k] = to_string(cfg.losses[k].objective);
    for (std::size_t k2 = 0; k2 < k; ++k2)
      if (cfg.losses[k2].objective == cfg.losses[k].objective) {
        term_labels[k] += "#" + std::to_string(k);
        break;
      }
  }

  std::int64_t global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double epoch_lr = cosine_lr(cfg.base_lr, global_step, total_steps);
    const auto batches =
        iterate_batches(ds, Split::train, batch, cfg.seed, epoch, true);
    Rng corrupt_rng(derive_seed(cfg.seed, "corrupt", static_cast<std::uint64_t>(epoch)));

    std::vector<double> term_sums(n_terms, 0.0);
    double total_sum = 0.0;
    int rows_seen = 0;

    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& rows = batches[b];
      const Matrix x = gather_rows(x_std, rows);
      const CorruptedBatch cb = corrupt(x, corruption, corrupt_rng);

      ForwardCache enc_cache;
      const Matrix z = model.encoder.forward(cb.corrupted, &enc_cache);

      std::vector<ForwardCache> dec_caches(n_terms), head_caches(n_terms);
      std::vector<LossResult> results(n_terms);
      for (std::size_t k = 0; k < n_terms; ++k) {
        const Matrix out = model.decoders[k].forward(z, &dec_caches[k]);
        switch (cfg.losses[k].objective) {
          case SslObjective::value_recon:
            results[k] = value_recon_loss(out, x);
            break;
          case SslObjective::mask_xent:
            results[k] = mask_xent_loss(out, cb.mask);
            break;
          case SslObjective::bin_recon: {
            Matrix target(static_cast<int>(rows.size()), d);
            for (int i = 0; i < target.rows(); ++i)
              for (int j = 0; j < d; ++j) target(i, j) = bin_numeric(rows[i], j);
            results[k] = bin_recon_loss(out, target);
            break;
          }
          case SslObjective::bin_xent: {
            const Matrix logits = model.heads[k]->forward(out, &head_caches[k]);
            IntMatrix idx(static_cast<int>(rows.size()), d);
            for (int i = 0; i < idx.rows(); ++i)
              for (int j = 0; j < d; ++j) idx(i, j) = bin_idx(rows[i], j);
            results[k] = bin_xent_loss(logits, one_hot_matrix(idx, t_eff), t_eff);
            break;
          }
        }
        if (!std::isfinite(results[k].value))
          throw RuntimeFailure("non-finite " + term_labels[k] + " loss at epoch " +
                               std::to_string(epoch) + ", batch " +
                               std::to_string(b));
      }

      const double total = combine_scaled(results, weights);
      model.zero_grads();
      Matrix z_grad(z.rows(), z.cols());
      for (std::size_t k = 0; k < n_terms; ++k) {
        Matrix g = std::move(results[k].grad);
        if (model.heads[k]) g = model.heads[k]->backward(head_caches[k], g);
        const Matrix gz = model.decoders[k].backward(dec_caches[k], g);
        for (int i = 0; i < z_grad.rows(); ++i)
          for (int j = 0; j < z_grad.cols(); ++j) z_grad(i, j) += gz(i, j);
      }
      model.encoder.backward(enc_cache, z_grad);

      const double lr = cosine_lr(cfg.base_lr, global_step, total_steps);
      try {
        optimizer.step(lr);
      } catch (const RuntimeFailure& e) {
        throw RuntimeFailure(std::string(e.what()) + " (epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(b) + ")");
      }
      ++global_step;

      const int bn = static_cast<int>(rows.size());
      rows_seen += bn;
      total_sum += total * bn;
      for (std::size_t k = 0; k < n_terms; ++k)
        term_sums[k] += results[k].value * bn;
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    std::ostringstream line;
    line.precision(10);
    line << "epoch=" << epoch + 1 << " lr=" << epoch_lr;
    for (std::size_t k = 0; k < n_terms; ++k)
      line << ' ' << term_labels[k] << '=' << term_sums[k] / rows_seen;
    line << " total=" << total_sum / rows_seen << " wall_ms=" << wall_ms;
    result.log.push_back(line.str());
  }
  return result;
}

}  // namespace tabbin
