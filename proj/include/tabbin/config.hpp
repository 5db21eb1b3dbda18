#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/evaluate.hpp"
#include "tabbin/grid.hpp"
#include "tabbin/train.hpp"

namespace tabbin {

// One JSON document drives every command. Every field has a default except
// dataset.path and dataset.task; unknown keys are rejected with their path.
struct SplitSection {
  std::string mode = "ratio";  // "ratio" | "files"
  double train_fraction = 0.64;
  double val_fraction = 0.16;
  double test_fraction = 0.2;
  std::string train_file, val_file, test_file;
};

struct DatasetSection {
  std::string path;  // required
  std::string task;  // required: binclass | multiclass | regression
  std::string label_column = "label";
  SplitSection split;
  int categorical_threshold = 20;
};

struct BinningSection {
  std::string method = "quantile";
  int bins = 10;
};

struct CorruptionSection {
  std::string mode = "none";
  double p_m = 0.0;
};

struct ModelSection {
  int depth = 2;
  int width = 256;
  int head_embed = 8;
};

struct LossSection {
  std::string objective = "bin_recon";
  double weight = 1.0;
};

struct TrainSection {
  int epochs = 1000;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 0;
};

struct ProbeSection {
  double lr = 0.01;
  int epochs = 100;
  int seeds = 10;
  double weight_decay = 1e-5;
  int batch_size = 0;
};

struct FinetuneSection {
  double lr = 1e-3;
  int epochs = 50;
};

struct GridSection {
  std::vector<double> p_m = {0.1, 0.3};
  std::vector<int> bins = {2, 10};
  std::vector<std::string> objectives = {"bin_recon"};
  std::vector<std::string> modes = {"constant"};
};

struct EvalSection {
  std::string mode = "probe";  // probe | finetune | bin_error | pca
  std::string run;             // pretrain output directory to evaluate
  std::string reference_run;   // bin_error mode: BinRecon baseline directory
};

struct AblateSection {
  std::string which = "bin_averages";
};

struct ExperimentConfig {
  DatasetSection dataset;
  BinningSection binning;
  CorruptionSection corruption;
  ModelSection model;
  std::vector<LossSection> losses = {{"bin_recon", 1.0}};
  TrainSection train;
  ProbeSection probe;
  FinetuneSection finetune;
  GridSection grid;
  EvalSection eval;
  AblateSection ablate;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Fully resolved document: every field explicit, fixed key order, so a
// parse -> serialize -> parse round trip is a fixed point.
std::string serialize_config(const ExperimentConfig& cfg);

// Load the dataset named by the config, assign splits, fill feature metadata.
Dataset load_dataset(const ExperimentConfig& cfg);

SslRunConfig to_ssl_config(const ExperimentConfig& cfg);
ProbeConfig to_probe_config(const ExperimentConfig& cfg);
GridAxes to_grid_axes(const ExperimentConfig& cfg);

}  // namespace tabbin
