#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabbin/binning.hpp"
#include "tabbin/corruption.hpp"
#include "tabbin/dataset.hpp"
#include "tabbin/mlp.hpp"
#include "tabbin/standardize.hpp"

namespace tabbin {

enum class SslObjective { value_recon, mask_xent, bin_recon, bin_xent };

SslObjective objective_from_string(const std::string& s);
std::string to_string(SslObjective o);

struct LossTerm {
  SslObjective objective = SslObjective::value_recon;
  double weight = 1.0;
};

struct SslRunConfig {
  int depth = 2;        // hidden layers in the encoder (0 = affine encoder)
  int width = 256;      // hidden width; also the representation size
  int head_embed = 8;   // per-feature embedding width E for bin_xent
  int epochs = 1000;
  double base_lr = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 0;   // 0 picks batch_size_rule(n_train)
  std::uint64_t seed = 0;
  CorruptionConfig corruption;
  std::vector<LossTerm> losses = {{SslObjective::value_recon, 1.0}};
  BinAblation ablation = BinAblation::none;
};

// Encoder plus one decoder per loss term; bin_xent decoders emit d*E
// per-feature embeddings and share one E -> T head.
struct SslModel {
  MlpNetwork encoder;
  std::vector<MlpNetwork> decoders;
  std::vector<std::optional<PerFeatureHead>> heads;  // set only for bin_xent
  std::vector<LossTerm> losses;
  int bin_count = 0;  // one-hot width T used by bin objectives

  Matrix encode(const Matrix& x_std) const { return encoder.forward(x_std); }
  void zero_grads();
  std::vector<ParamSpan> all_params();
  std::vector<const std::vector<DenseLayer>*> checkpoint_networks() const;
  std::vector<std::vector<DenseLayer>*> checkpoint_networks();
};

bool needs_binning(const SslRunConfig& cfg);

// Deterministic model construction: encoder first, then per loss term the
// decoder and (bin_xent only) its head, all drawn from one seeded stream.
SslModel build_ssl_model(int n_features, const SslRunConfig& cfg, int bin_count);

void save_model(const SslModel& model, const std::string& path);
void load_model(SslModel& model, const std::string& path);

struct PretrainResult {
  SslModel model;
  std::vector<std::string> log;  // one line per epoch
};

// SSL pretraining: per batch — corrupt, encode, decode per loss term,
// combine, backprop, AdamW step under cosine annealing across all
// epochs*steps_per_epoch steps. Deterministic given the config seed.
PretrainResult pretrain(const Dataset& ds, const Standardizer& stdz,
                        const BinningSpec* binning, const SslRunConfig& cfg);

}  // namespace tabbin
