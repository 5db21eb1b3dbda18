#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabbin/binning.hpp"
#include "tabbin/dataset.hpp"
#include "tabbin/mlp.hpp"
#include "tabbin/standardize.hpp"

namespace tabbin {

struct ProbeConfig {
  double lr = 0.01;
  int epochs = 100;
  int seeds = 10;
  double weight_decay = 1e-5;
  int batch_size = 0;  // 0 picks batch_size_rule(n_train)
  bool frozen = true;  // false only for fine-tuning
};

// Aggregated evaluation result across probe seeds. Regression reports RMSE in
// standardized label units, with the original-unit values carried alongside.
struct RunReport {
  std::string name;
  std::string metric;  // "accuracy", "rmse", or "mse"
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;  // population, over seeds
  bool has_original_units = false;
  std::vector<double> per_seed_original;
  double mean_original = 0.0;
  double stddev_original = 0.0;
  std::map<std::string, std::string> provenance;  // dataset/binning/config hashes
};

double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);  // population

// True when larger metric values are better (accuracy), false for rmse/mse.
bool metric_higher_is_better(TaskType task);

// Affine head on frozen representations, one run per seed (seeds vary head
// initialization and batch order; the encoder is shared and never touched).
// Classification trains with softmax cross-entropy and reports accuracy;
// regression trains on standardized labels with squared error and reports
// RMSE. Heads fit on train rows; the metric comes from eval_split.
RunReport linear_probe(const MlpNetwork& encoder, const Dataset& ds,
                       const Standardizer& stdz, const ProbeConfig& probe,
                       std::uint64_t seed, Split eval_split = Split::test);

// Joint supervised training of a per-seed copy of the pretrained encoder and
// a fresh affine head, fresh optimizer. Evaluation as in linear_probe.
RunReport finetune(const MlpNetwork& encoder, const Dataset& ds,
                   const Standardizer& stdz, const ProbeConfig& probe,
                   std::uint64_t seed, Split eval_split = Split::test);

// Affine head regressing all per-feature bin indices from frozen
// representations; the metric is test MSE (summed over features, mean over
// samples, matching the bin reconstruction loss).
RunReport bin_prediction_probe(const MlpNetwork& encoder, const Dataset& ds,
                               const Standardizer& stdz,
                               const BinningSpec& binning,
                               const ProbeConfig& probe, std::uint64_t seed,
                               Split eval_split = Split::test);

// (value - reference) / reference * 100.
double relative_increase_percent(double value, double reference);

std::string report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);
void write_report(const RunReport& report, const std::string& json_path,
                  const std::string& csv_path);

}  // namespace tabbin
