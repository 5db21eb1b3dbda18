#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabbin/config.hpp"
#include "tabbin/errors.hpp"
#include "tabbin/evaluate.hpp"
#include "tabbin/grid.hpp"
#include "tabbin/hashing.hpp"
#include "tabbin/pca.hpp"
#include "tabbin/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using namespace tabbin;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory: " + dir);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string echo_config(const ExperimentConfig& cfg, const std::string& out_dir,
                        const std::string& command) {
  const std::string text = serialize_config(cfg);
  write_text(out_dir + "/config_" + command + ".json", text);
  return hash_to_hex(fnv1a64(text));
}

// ---------------------------------------------------------------- bin ----

int cmd_bin(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  echo_config(cfg, out_dir, "bin");
  const Dataset ds = load_dataset(cfg);
  const BinningSpec spec =
      fit_binning(ds, bin_method_from_string(cfg.binning.method), cfg.binning.bins);
  const std::string path = out_dir + "/binning.spec";
  save_binning(spec, path);

  std::cout << "binning: method=" << cfg.binning.method
            << " requested_bins=" << cfg.binning.bins << " features=" << spec.n_features()
            << "\n";
  for (int j = 0; j < spec.n_features(); ++j) {
    const auto& fb = spec.features[j];
    std::cout << "  feature " << j << " (" << ds.feature_meta[j].name
              << "): effective_bins=" << fb.bin_count
              << (fb.value_based ? " per-value" : "") << "\n";
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

// ----------------------------------------------------------- pretrain ----

void write_checkpoint_meta(const std::string& path, const ExperimentConfig& cfg,
                           const SslModel& model, int n_features,
                           const std::string& dataset_hash,
                           const std::string& binning_hash,
                           const std::string& config_hash,
                           BinAblation ablation) {
  ordered_json j;
  j["format"] = "tabbin-checkpoint-meta v1";
  j["n_features"] = n_features;
  j["model"]["depth"] = cfg.model.depth;
  j["model"]["width"] = cfg.model.width;
  j["model"]["head_embed"] = cfg.model.head_embed;
  j["losses"] = ordered_json::array();
  for (const auto& term : model.losses)
    j["losses"].push_back(
        {{"objective", to_string(term.objective)}, {"weight", term.weight}});
  j["bin_count"] = model.bin_count;
  j["seed"] = cfg.seed;
  j["ablation"] = to_string(ablation);
  j["hashes"]["dataset"] = dataset_hash;
  j["hashes"]["binning"] = binning_hash;
  j["hashes"]["config"] = config_hash;
  write_text(path, j.dump(2) + "\n");
}

// Shared by pretrain/grid/ablate: run SSL and drop every artifact into dir.
SslModel pretrain_into_dir(const ExperimentConfig& cfg, const Dataset& ds,
                           const Standardizer& stdz, const SslRunConfig& ssl,
                           const BinningSpec* binning,
                           const std::string& binning_hash,
                           const std::string& dir) {
  ensure_dir(dir);
  const std::string config_hash = echo_config(cfg, dir, "pretrain");
  PretrainResult result = pretrain(ds, stdz, binning, ssl);

  std::ostringstream log;
  for (const auto& line : result.log) log << line << "\n";
  write_text(dir + "/train_log.txt", log.str());
  save_model(result.model, dir + "/checkpoint.tbck");
  write_checkpoint_meta(dir + "/checkpoint.meta.json", cfg, result.model,
                        ds.n_features(), hash_to_hex(hash_file(cfg.dataset.path)),
                        binning_hash, config_hash, ssl.ablation);
  return std::move(result.model);
}

int cmd_pretrain(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const Dataset ds = load_dataset(cfg);
  const Standardizer stdz = Standardizer::fit(ds);
  const SslRunConfig ssl = to_ssl_config(cfg);

  BinningSpec binning;
  const BinningSpec* binning_ptr = nullptr;
  std::string binning_hash;
  if (needs_binning(ssl)) {
    const std::string spec_path = out_dir + "/binning.spec";
    if (!fs::exists(spec_path))
      throw ValidationError("no binning spec at " + spec_path +
                            "; run `tabbin bin` into this output directory first");
    binning = load_binning(spec_path);
    binning_ptr = &binning;
    binning_hash = hash_to_hex(hash_file(spec_path));
  }

  pretrain_into_dir(cfg, ds, stdz, ssl, binning_ptr, binning_hash, out_dir);
  std::cout << "pretrained " << cfg.train.epochs << " epochs; wrote " << out_dir
            << "/checkpoint.tbck\n";
  const std::string log = read_text(out_dir + "/train_log.txt");
  const auto last = log.find_last_of('\n', log.size() - 2);
  if (!log.empty())
    std::cout << log.substr(last == std::string::npos ? 0 : last + 1);
  return 0;
}

// --------------------------------------------------------------- eval ----

struct LoadedRun {
  SslModel model;
  int n_features = 0;
  std::string dataset_hash;
  std::string binning_hash;
  std::string checkpoint_hash;
  std::string dir;
};

LoadedRun load_run(const std::string& run_dir) {
  const std::string meta_path = run_dir + "/checkpoint.meta.json";
  ordered_json meta;
  try {
    meta = ordered_json::parse(read_text(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("corrupt checkpoint metadata at " + meta_path + ": " +
                          e.what());
  }
  try {
    LoadedRun run;
    run.dir = run_dir;
    run.n_features = meta.at("n_features").get<int>();
    SslRunConfig ssl;
    ssl.depth = meta.at("model").at("depth").get<int>();
    ssl.width = meta.at("model").at("width").get<int>();
    ssl.head_embed = meta.at("model").at("head_embed").get<int>();
    ssl.seed = meta.at("seed").get<std::uint64_t>();
    ssl.losses.clear();
    for (const auto& term : meta.at("losses"))
      ssl.losses.push_back({objective_from_string(term.at("objective").get<std::string>()),
                            term.at("weight").get<double>()});
    const int bin_count = meta.at("bin_count").get<int>();
    run.dataset_hash = meta.at("hashes").at("dataset").get<std::string>();
    run.binning_hash = meta.at("hashes").at("binning").get<std::string>();
    run.model = build_ssl_model(run.n_features, ssl, bin_count);
    load_model(run.model, run_dir + "/checkpoint.tbck");
    run.checkpoint_hash = hash_to_hex(hash_file(run_dir + "/checkpoint.tbck"));
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint metadata at " + meta_path +
                          " is missing fields: " + e.what());
  }
}

void check_run_hashes(const LoadedRun& run, const ExperimentConfig& cfg) {
  const std::string dataset_now = hash_to_hex(hash_file(cfg.dataset.path));
  if (dataset_now != run.dataset_hash)
    throw ValidationError("dataset hash mismatch: checkpoint was trained on " +
                          run.dataset_hash + " but " + cfg.dataset.path +
                          " hashes to " + dataset_now);
  if (!run.binning_hash.empty()) {
    const std::string spec_path = run.dir + "/binning.spec";
    if (!fs::exists(spec_path))
      throw ValidationError("checkpoint used a binning spec but " + spec_path +
                            " is missing");
    const std::string binning_now = hash_to_hex(hash_file(spec_path));
    if (binning_now != run.binning_hash)
      throw ValidationError("binning spec hash mismatch: checkpoint recorded " +
                            run.binning_hash + " but " + spec_path +
                            " hashes to " + binning_now);
  }
}

void fill_provenance(RunReport& report, const LoadedRun& run,
                     const std::string& config_hash) {
  report.provenance["dataset"] = run.dataset_hash;
  report.provenance["binning"] = run.binning_hash;
  report.provenance["checkpoint"] = run.checkpoint_hash;
  report.provenance["config"] = config_hash;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir,
             const std::string& mode, int pca_feature) {
  ensure_dir(out_dir);
  const std::string config_hash = echo_config(cfg, out_dir, "eval");
  const std::string run_dir = cfg.eval.run.empty() ? out_dir : cfg.eval.run;

  const Dataset ds = load_dataset(cfg);
  const Standardizer stdz = Standardizer::fit(ds);
  LoadedRun run = load_run(run_dir);
  check_run_hashes(run, cfg);
  if (run.n_features != ds.n_features())
    throw ValidationError("checkpoint expects " + std::to_string(run.n_features) +
                          " features, dataset has " +
                          std::to_string(ds.n_features()));

  if (mode == "probe") {
    RunReport report = linear_probe(run.model.encoder, ds, stdz,
                                    to_probe_config(cfg), cfg.seed);
    fill_provenance(report, run, config_hash);
    write_report(report, out_dir + "/report_probe.json",
                 out_dir + "/report_probe.csv");
    std::cout << "probe " << report.metric << ": mean=" << report.mean
              << " stddev=" << report.stddev << " (" << report.per_seed.size()
              << " seeds)\n";
    return 0;
  }

  if (mode == "finetune") {
    ProbeConfig probe = to_probe_config(cfg);
    probe.lr = cfg.finetune.lr;
    probe.epochs = cfg.finetune.epochs;
    probe.frozen = false;
    RunReport report = finetune(run.model.encoder, ds, stdz, probe, cfg.seed);
    fill_provenance(report, run, config_hash);
    write_report(report, out_dir + "/report_finetune.json",
                 out_dir + "/report_finetune.csv");
    std::cout << "finetune " << report.metric << ": mean=" << report.mean
              << " stddev=" << report.stddev << "\n";
    return 0;
  }

  const std::string spec_path = run.dir + "/binning.spec";
  if (!fs::exists(spec_path))
    throw ValidationError(mode + " mode needs " + spec_path);
  const BinningSpec binning = load_binning(spec_path);

  if (mode == "bin_error") {
    if (cfg.eval.reference_run.empty())
      throw ValidationError(
          "bin_error mode needs eval.reference_run pointing at the bin_recon "
          "baseline run");
    LoadedRun reference = load_run(cfg.eval.reference_run);
    check_run_hashes(reference, cfg);
    // Runs that trained without bins (e.g. value_recon) record no binning
    // hash; the spec next to the run must then match the reference's.
    if (!run.binning_hash.empty() && !reference.binning_hash.empty() &&
        reference.binning_hash != run.binning_hash)
      throw ValidationError(
          "run and reference were trained with different binning specs: " +
          run.binning_hash + " vs " + reference.binning_hash);
    if (!reference.binning_hash.empty() &&
        hash_to_hex(hash_file(spec_path)) != reference.binning_hash)
      throw ValidationError("the spec at " + spec_path +
                            " does not match the reference run's binning spec");

    RunReport report = bin_prediction_probe(run.model.encoder, ds, stdz, binning,
                                            to_probe_config(cfg), cfg.seed);
    RunReport ref_report =
        bin_prediction_probe(reference.model.encoder, ds, stdz, binning,
                             to_probe_config(cfg), cfg.seed);
    fill_provenance(report, run, config_hash);
    fill_provenance(ref_report, reference, config_hash);
    const double increase = relative_increase_percent(report.mean, ref_report.mean);

    ordered_json j;
    j["run"] = ordered_json::parse(report_to_json(report));
    j["reference"] = ordered_json::parse(report_to_json(ref_report));
    j["relative_increase_percent"] = increase;
    write_text(out_dir + "/report_bin_error.json", j.dump(2) + "\n");

    std::ostringstream csv;
    csv.precision(17);
    csv << "role,mse_mean,mse_stddev,relative_increase_percent\n";
    csv << "run," << report.mean << ',' << report.stddev << ',' << increase << "\n";
    csv << "reference," << ref_report.mean << ',' << ref_report.stddev << ",0\n";
    write_text(out_dir + "/report_bin_error.csv", csv.str());
    std::cout << "bin-prediction mse=" << report.mean
              << " reference=" << ref_report.mean
              << " relative_increase=" << increase << "%\n";
    return 0;
  }

  if (mode == "pca") {
    if (pca_feature < 0 || pca_feature >= ds.n_features())
      throw ValidationError("--pca-feature must name a feature in [0, " +
                            std::to_string(ds.n_features()) + ")");
    const auto rows = ds.rows_of(Split::test);
    const Matrix x_std = stdz.transform(gather_rows(ds.features, rows));
    const Matrix z = run.model.encoder.forward(x_std);
    const PcaResult pca = pca_top2(z);

    std::ostringstream csv;
    csv.precision(17);
    csv << "pc1,pc2,bin_index\n";
    const auto& fb = binning.features[pca_feature];
    for (std::size_t i = 0; i < rows.size(); ++i)
      csv << pca.projected(static_cast<int>(i), 0) << ','
          << pca.projected(static_cast<int>(i), 1) << ','
          << fb.assign(ds.features(rows[i], pca_feature)) << "\n";
    write_text(out_dir + "/pca.csv", csv.str());
    std::cout << "pca: " << rows.size() << " rows, explained variance "
              << pca.explained_variance[0] << ", " << pca.explained_variance[1]
              << "; colored by feature " << pca_feature << " bins\n";
    return 0;
  }

  throw ValidationError("unknown eval mode: " + mode);
}

// --------------------------------------------------------------- grid ----

int cmd_grid(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
             bool resume) {
  ensure_dir(out_dir);
  echo_config(cfg, out_dir, "grid");
  const Dataset ds = load_dataset(cfg);
  const Standardizer stdz = Standardizer::fit(ds);

  GridRunContext ctx;
  ctx.ds = &ds;
  ctx.stdz = &stdz;
  ctx.base = to_ssl_config(cfg);
  ctx.probe = to_probe_config(cfg);
  ctx.seed = cfg.seed;

  const auto cells = grid_cells(to_grid_axes(cfg));
  std::vector<GridCellResult> results(cells.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string report_path =
        out_dir + "/cells/" + cells[i].name() + "/report.json";
    if (resume && fs::exists(report_path)) {
      const ordered_json j = ordered_json::parse(read_text(report_path));
      results[i].cell = cells[i];
      results[i].val_metric = j.at("mean").get<double>();
      results[i].report.name = j.at("name").get<std::string>();
      results[i].report.metric = j.at("metric").get<std::string>();
      results[i].report.per_seed = j.at("per_seed").get<std::vector<double>>();
      results[i].report.mean = results[i].val_metric;
      results[i].report.stddev = j.at("stddev").get<double>();
    } else {
      todo.push_back(i);
    }
  }

  const auto fresh = run_grid_subset(ctx, cells, todo, threads);
  for (std::size_t k = 0; k < todo.size(); ++k) results[todo[k]] = fresh[k];

  bool any_failed = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& r = results[i];
    const std::string cell_dir = out_dir + "/cells/" + cells[i].name();
    ensure_dir(cell_dir);
    if (r.failed) {
      any_failed = true;
      write_text(cell_dir + "/error.txt", r.error + "\n");
    } else if (std::find(todo.begin(), todo.end(), i) != todo.end()) {
      write_report(r.report, cell_dir + "/report.json", cell_dir + "/report.csv");
    }
  }
  write_text(out_dir + "/grid.csv", grid_csv(results));

  const int best = select_best(results, metric_higher_is_better(ds.task));
  if (best >= 0) {
    ExperimentConfig best_cfg = cfg;
    const auto& cell = results[best].cell;
    best_cfg.losses = {{to_string(cell.objective), 1.0}};
    best_cfg.binning.method = "quantile";
    best_cfg.binning.bins = cell.bins;
    best_cfg.corruption.p_m = cell.p_m;
    best_cfg.corruption.mode = cell.p_m > 0.0 ? to_string(cell.mode) : "none";
    write_text(out_dir + "/best_config.json", serialize_config(best_cfg));
    std::cout << "best cell: " << cell.name() << " val_"
              << results[best].report.metric << "=" << results[best].val_metric
              << "\n";
  }
  if (any_failed) {
    std::cout << "grid finished with failures; see grid.csv\n";
    return 2;
  }
  return 0;
}

// ------------------------------------------------------------- ablate ----

RunReport run_for_ablation(const ExperimentConfig& cfg, const Dataset& ds,
                           const Standardizer& stdz, const std::string& dir,
                           BinMethod method, BinAblation ablation,
                           std::uint64_t seed) {
  const std::string report_path = dir + "/report.json";
  if (fs::exists(report_path)) {
    const ordered_json j = ordered_json::parse(read_text(report_path));
    RunReport report;
    report.name = j.at("name").get<std::string>();
    report.metric = j.at("metric").get<std::string>();
    report.per_seed = j.at("per_seed").get<std::vector<double>>();
    report.mean = j.at("mean").get<double>();
    report.stddev = j.at("stddev").get<double>();
    return report;
  }
  ensure_dir(dir);
  SslRunConfig ssl = to_ssl_config(cfg);
  ssl.seed = seed;
  ssl.ablation = ablation;
  if (!needs_binning(ssl))
    throw ValidationError(
        "ablations need a bin-based objective (bin_recon or bin_xent) in "
        "the loss list");

  const BinningSpec binning = fit_binning(ds, method, cfg.binning.bins);
  save_binning(binning, dir + "/binning.spec");
  const std::string binning_hash = hash_to_hex(hash_file(dir + "/binning.spec"));
  const SslModel model =
      pretrain_into_dir(cfg, ds, stdz, ssl, &binning, binning_hash, dir);

  RunReport report =
      linear_probe(model.encoder, ds, stdz, to_probe_config(cfg), seed);
  report.provenance["dataset"] = hash_to_hex(hash_file(cfg.dataset.path));
  report.provenance["binning"] = binning_hash;
  write_report(report, report_path, dir + "/report.csv");
  return report;
}

int cmd_ablate(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::string& which) {
  ensure_dir(out_dir);
  echo_config(cfg, out_dir, "ablate");
  const Dataset ds = load_dataset(cfg);
  const Standardizer stdz = Standardizer::fit(ds);

  const BinMethod base_method = bin_method_from_string(cfg.binning.method);
  const RunReport baseline =
      run_for_ablation(cfg, ds, stdz, out_dir + "/baseline", base_method,
                       BinAblation::none, cfg.seed);

  RunReport ablated;
  if (which == "equal_width") {
    ablated = run_for_ablation(cfg, ds, stdz, out_dir + "/ablate_equal_width",
                               BinMethod::equal_width, BinAblation::none,
                               cfg.seed);
  } else {
    ablated = run_for_ablation(cfg, ds, stdz, out_dir + "/ablate_" + which,
                               base_method, ablation_from_string(which),
                               cfg.seed);
  }

  const double change = relative_increase_percent(ablated.mean, baseline.mean);
  ordered_json j;
  j["which"] = which;
  j["metric"] = baseline.metric;
  j["baseline"] = ordered_json::parse(report_to_json(baseline));
  j["ablated"] = ordered_json::parse(report_to_json(ablated));
  j["relative_change_percent"] = change;
  write_text(out_dir + "/ablation_report.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv.precision(17);
  csv << "variant," << baseline.metric << "_mean," << baseline.metric
      << "_stddev,relative_change_percent\n";
  csv << "baseline," << baseline.mean << ',' << baseline.stddev << ",0\n";
  csv << which << ',' << ablated.mean << ',' << ablated.stddev << ',' << change
      << "\n";
  write_text(out_dir + "/ablation_report.csv", csv.str());

  std::cout << "ablation " << which << ": baseline " << baseline.metric << "="
            << baseline.mean << ", ablated=" << ablated.mean << " ("
            << (change >= 0 ? "+" : "") << change << "%)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binning-as-pretext-task tabular SSL toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config JSON")->required();
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_option("--seed", seed_override, "seed (overrides config)")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--threads", threads,
                 "worker threads for grid cells (default TABBIN_THREADS or 1)");

  auto* bin_cmd = app.add_subcommand("bin", "fit and save the binning spec");
  auto* pre_cmd = app.add_subcommand("pretrain", "run SSL pretraining");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a pretrained checkpoint");
  std::string eval_mode;
  int pca_feature = 0;
  eval_cmd->add_option("--mode", eval_mode,
                       "probe|finetune|bin_error|pca (overrides config)");
  eval_cmd->add_option("--pca-feature", pca_feature,
                       "feature whose bin index labels the pca rows");
  auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search");
  bool resume = false;
  grid_cmd->add_flag("--resume", resume, "skip cells that already have reports");
  auto* ablate_cmd =
      app.add_subcommand("ablate", "compare an ablated run against the baseline");
  std::string which;
  ablate_cmd->add_option(
      "--which", which,
      "shuffle_order|bin_averages|per_value|equal_width (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (seed_given) cfg.seed = seed_override;
    if (threads <= 0) {
      if (const char* env = std::getenv("TABBIN_THREADS"))
        threads = std::max(1, std::atoi(env));
      else
        threads = 1;
    }

    if (bin_cmd->parsed()) return cmd_bin(cfg, cfg.output_dir);
    if (pre_cmd->parsed()) return cmd_pretrain(cfg, cfg.output_dir);
    if (eval_cmd->parsed()) {
      const std::string mode = eval_mode.empty() ? cfg.eval.mode : eval_mode;
      return cmd_eval(cfg, cfg.output_dir, mode, pca_feature);
    }
    if (grid_cmd->parsed()) return cmd_grid(cfg, cfg.output_dir, threads, resume);
    if (ablate_cmd->parsed()) {
      const std::string w = which.empty() ? cfg.ablate.which : which;
      if (w != "shuffle_order" && w != "bin_averages" && w != "per_value" &&
          w != "equal_width")
        throw ValidationError(
            "--which must be shuffle_order, bin_averages, per_value, or "
            "equal_width");
      return cmd_ablate(cfg, cfg.output_dir, w);
    }
    throw ValidationError("no command given");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeFailure& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
