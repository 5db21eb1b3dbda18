#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

// Runs the installed binary through the shell, capturing exit code and both
// streams. `env_prefix` lets a test export variables for one invocation.
CmdResult run_cli(const std::string& args, const fs::path& scratch,
                  const std::string& env_prefix = "") {
  const fs::path out_path = scratch / "cli_stdout.txt";
  const fs::path err_path = scratch / "cli_stderr.txt";
  std::string cmd = env_prefix + " \"" + std::string(TABBIN_CLI_PATH) + "\" " +
                    args + " > \"" + out_path.string() + "\" 2> \"" +
                    err_path.string() + "\"";
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  REQUIRE(raw != -1);
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// One deterministic regression table shared by every test: three features
// with distinct scales and a label that is affine in them.
std::string fixture_csv(int rows) {
  std::ostringstream out;
  out.precision(17);
  out << "x0,x1,x2,label\n";
  for (int i = 0; i < rows; ++i) {
    const double x0 = 0.1 * i;
    const double x1 = static_cast<double>((i * 37 + 5) % 100) / 25.0;
    const double x2 = static_cast<double>((i * 53 + 11) % 17) / 4.0;
    const double y = 2.0 * x0 - x1 + 0.5 * x2 + 0.01 * ((i * 29) % 7);
    out << x0 << ',' << x1 << ',' << x2 << ',' << y << "\n";
  }
  return out.str();
}

// A workspace with the csv, a config, and room for per-test output dirs.
struct Workspace {
  fs::path root;
  fs::path csv;

  Workspace() {
    static int counter = 0;
    root = fs::temp_directory_path() /
           ("tabbin_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(++counter));
    fs::create_directories(root);
    csv = root / "data.csv";
    spit(csv, fixture_csv(60));
  }

  ordered_json base_config(const std::string& out_name) const {
    ordered_json j;
    j["dataset"]["path"] = csv.string();
    j["dataset"]["task"] = "regression";
    j["dataset"]["split"]["train_fraction"] = 0.6;
    j["dataset"]["split"]["val_fraction"] = 0.2;
    j["dataset"]["split"]["test_fraction"] = 0.2;
    j["binning"]["bins"] = 4;
    j["model"]["depth"] = 0;
    j["model"]["width"] = 8;
    j["losses"] = ordered_json::array(
        {ordered_json{{"objective", "bin_recon"}, {"weight", 1.0}}});
    j["train"]["epochs"] = 3;
    j["train"]["lr"] = 1e-3;
    j["probe"]["lr"] = 0.05;
    j["probe"]["epochs"] = 10;
    j["probe"]["seeds"] = 2;
    j["seed"] = 7;
    j["output_dir"] = (root / out_name).string();
    return j;
  }

  fs::path write_config(const std::string& name, const ordered_json& j) const {
    const fs::path p = root / name;
    spit(p, j.dump(2) + "\n");
    return p;
  }
};

}  // namespace

TEST_CASE("bin fits a spec, reports per-feature counts, and reruns bit-exact") {
  Workspace ws;
  const fs::path cfg = ws.write_config("bin.json", ws.base_config("bin_out"));
  const fs::path out = ws.root / "bin_out";

  const CmdResult r = run_cli("bin --config \"" + cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("binning: method=quantile requested_bins=4 features=3") !=
        std::string::npos);
  CHECK(r.out.find("feature 0 (x0)") != std::string::npos);
  CHECK(r.out.find("wrote " + (out / "binning.spec").string()) !=
        std::string::npos);
  CHECK(fs::exists(out / "binning.spec"));
  CHECK(fs::exists(out / "config_bin.json"));

  const std::string first = slurp(out / "binning.spec");
  const CmdResult again = run_cli("bin --config \"" + cfg.string() + "\"", ws.root);
  CHECK(again.exit_code == 0);
  CHECK(slurp(out / "binning.spec") == first);

  // Per-value binning flags every feature in the summary.
  ordered_json pv = ws.base_config("bin_pv_out");
  pv["binning"]["method"] = "per_value";
  const fs::path pv_cfg = ws.write_config("bin_pv.json", pv);
  const CmdResult pr = run_cli("bin --config \"" + pv_cfg.string() + "\"", ws.root);
  CHECK(pr.exit_code == 0);
  CHECK(pr.out.find(" per-value") != std::string::npos);

  // An unfittable bin count is a validation error.
  ordered_json bad = ws.base_config("bin_bad_out");
  bad["binning"]["bins"] = 1;
  const fs::path bad_cfg = ws.write_config("bin_bad.json", bad);
  const CmdResult br = run_cli("bin --config \"" + bad_cfg.string() + "\"", ws.root);
  CHECK(br.exit_code == 1);
  CHECK(br.err.rfind("error: ", 0) == 0);
  CHECK(br.err.find("bin count") != std::string::npos);
}

TEST_CASE("pretrain requires the spec, writes artifacts, and reruns bit-exact") {
  Workspace ws;
  const fs::path cfg = ws.write_config("pre.json", ws.base_config("pre_out"));
  const fs::path out = ws.root / "pre_out";

  // Bin objectives refuse to run before `bin` has produced a spec.
  const CmdResult missing =
      run_cli("pretrain --config \"" + cfg.string() + "\"", ws.root);
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("run `tabbin bin`") != std::string::npos);

  REQUIRE(run_cli("bin --config \"" + cfg.string() + "\"", ws.root).exit_code == 0);
  const CmdResult r = run_cli("pretrain --config \"" + cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("pretrained 3 epochs; wrote " +
                   (out / "checkpoint.tbck").string()) != std::string::npos);
  CHECK(fs::exists(out / "checkpoint.tbck"));
  CHECK(fs::exists(out / "checkpoint.meta.json"));
  CHECK(fs::exists(out / "train_log.txt"));
  CHECK(fs::exists(out / "config_pretrain.json"));

  // One log line per epoch, shaped like the progress format.
  const std::string log = slurp(out / "train_log.txt");
  int lines = 0;
  std::istringstream in(log);
  for (std::string line; std::getline(in, line); ++lines) {
    CHECK(line.rfind("epoch=" + std::to_string(lines + 1) + " lr=", 0) == 0);
    CHECK(line.find(" bin_recon=") != std::string::npos);
    CHECK(line.find(" total=") != std::string::npos);
  }
  CHECK(lines == 3);

  // Metadata records the provenance hashes.
  const auto meta = ordered_json::parse(slurp(out / "checkpoint.meta.json"));
  CHECK(meta.at("format") == "tabbin-checkpoint-meta v1");
  CHECK(meta.at("n_features") == 3);
  CHECK(meta.at("losses")[0].at("objective") == "bin_recon");
  CHECK(meta.at("hashes").at("dataset").get<std::string>().size() == 16);
  CHECK(meta.at("hashes").at("binning").get<std::string>().size() == 16);

  const std::string checkpoint = slurp(out / "checkpoint.tbck");
  const CmdResult again =
      run_cli("pretrain --config \"" + cfg.string() + "\"", ws.root);
  CHECK(again.exit_code == 0);
  CHECK(slurp(out / "checkpoint.tbck") == checkpoint);

  // A different seed trains different weights.
  const CmdResult other = run_cli(
      "pretrain --config \"" + cfg.string() + "\" --seed 8", ws.root);
  CHECK(other.exit_code == 0);
  CHECK(slurp(out / "checkpoint.tbck") != checkpoint);
}

TEST_CASE("eval probes a checkpoint and refuses mismatched inputs") {
  Workspace ws;
  const fs::path cfg = ws.write_config("eval.json", ws.base_config("eval_out"));
  const fs::path out = ws.root / "eval_out";
  REQUIRE(run_cli("bin --config \"" + cfg.string() + "\"", ws.root).exit_code == 0);
  REQUIRE(run_cli("pretrain --config \"" + cfg.string() + "\"", ws.root).exit_code == 0);

  const CmdResult r = run_cli("eval --config \"" + cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("probe rmse: mean=", 0) == 0);
  CHECK(r.out.find("(2 seeds)") != std::string::npos);
  REQUIRE(fs::exists(out / "report_probe.json"));
  REQUIRE(fs::exists(out / "report_probe.csv"));

  const auto report = ordered_json::parse(slurp(out / "report_probe.json"));
  CHECK(report.at("name") == "linear_probe");
  CHECK(report.at("metric") == "rmse");
  CHECK(report.at("per_seed").size() == 2);
  CHECK(report.at("provenance").at("checkpoint").get<std::string>().size() == 16);
  const std::string csv = slurp(out / "report_probe.csv");
  CHECK(csv.rfind("seed,rmse,rmse_original\n0,", 0) == 0);

  // finetune mode writes its own report pair.
  ordered_json ft = ws.base_config("eval_out");
  ft["finetune"]["epochs"] = 5;
  ft["finetune"]["lr"] = 1e-3;
  const fs::path ft_cfg = ws.write_config("eval_ft.json", ft);
  const CmdResult fr = run_cli(
      "eval --mode finetune --config \"" + ft_cfg.string() + "\"", ws.root);
  CHECK(fr.exit_code == 0);
  CHECK(fr.out.rfind("finetune rmse: mean=", 0) == 0);
  CHECK(fs::exists(out / "report_finetune.json"));

  // A tampered dataset no longer matches the checkpoint's recorded hash.
  const fs::path moved = ws.root / "data_tampered.csv";
  spit(moved, fixture_csv(60) + "99,99,99,99\n");
  ordered_json tampered = ws.base_config("eval_out");
  tampered["dataset"]["path"] = moved.string();
  const fs::path t_cfg = ws.write_config("eval_tampered.json", tampered);
  const CmdResult tr = run_cli("eval --config \"" + t_cfg.string() + "\"", ws.root);
  CHECK(tr.exit_code == 1);
  CHECK(tr.err.find("dataset hash mismatch") != std::string::npos);

  // Unknown eval mode is rejected.
  const CmdResult um = run_cli(
      "eval --mode sideways --config \"" + cfg.string() + "\"", ws.root);
  CHECK(um.exit_code == 1);
  CHECK(um.err.find("unknown eval mode") != std::string::npos);
}

TEST_CASE("eval pca projects the test split with bin-index labels") {
  Workspace ws;
  const fs::path cfg = ws.write_config("pca.json", ws.base_config("pca_out"));
  const fs::path out = ws.root / "pca_out";
  REQUIRE(run_cli("bin --config \"" + cfg.string() + "\"", ws.root).exit_code == 0);
  REQUIRE(run_cli("pretrain --config \"" + cfg.string() + "\"", ws.root).exit_code == 0);

  const CmdResult r = run_cli(
      "eval --mode pca --pca-feature 1 --config \"" + cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("pca: 12 rows", 0) == 0);

  const std::string csv = slurp(out / "pca.csv");
  std::vector<std::string> lines;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 13);  // header + one row per test sample
  CHECK(lines[0] == "pc1,pc2,bin_index");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c1 = lines[i].find(',');
    const auto c2 = lines[i].find(',', c1 + 1);
    REQUIRE(c2 != std::string::npos);
    const int bin = std::stoi(lines[i].substr(c2 + 1));
    CHECK(bin >= 1);
    CHECK(bin <= 4);
  }

  const CmdResult oob = run_cli(
      "eval --mode pca --pca-feature 9 --config \"" + cfg.string() + "\"", ws.root);
  CHECK(oob.exit_code == 1);
  CHECK(oob.err.find("--pca-feature") != std::string::npos);
}

TEST_CASE("eval bin_error compares a run against a reference checkpoint") {
  Workspace ws;
  ordered_json value_cfg = ws.base_config("run_value");
  value_cfg["losses"] =
      ordered_json::array({ordered_json{{"objective", "value_recon"}, {"weight", 1.0}}});
  const fs::path v_cfg = ws.write_config("value.json", value_cfg);
  const fs::path bin_cfg = ws.write_config("bin.json", ws.base_config("run_bin"));

  REQUIRE(run_cli("bin --config \"" + bin_cfg.string() + "\"", ws.root).exit_code == 0);
  REQUIRE(run_cli("pretrain --config \"" + bin_cfg.string() + "\"", ws.root).exit_code == 0);
  REQUIRE(run_cli("pretrain --config \"" + v_cfg.string() + "\"", ws.root).exit_code == 0);

  // The value_recon run needs the shared spec next to its checkpoint for the
  // bin-error diagnostic.
  fs::copy_file(ws.root / "run_bin" / "binning.spec",
                ws.root / "run_value" / "binning.spec");

  ordered_json diag = ws.base_config("diag_out");
  diag["eval"]["mode"] = "bin_error";
  diag["eval"]["run"] = (ws.root / "run_value").string();
  diag["eval"]["reference_run"] = (ws.root / "run_bin").string();
  const fs::path d_cfg = ws.write_config("diag.json", diag);

  const CmdResult r = run_cli("eval --config \"" + d_cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("bin-prediction mse=", 0) == 0);
  CHECK(r.out.find("relative_increase=") != std::string::npos);

  const auto j = ordered_json::parse(slurp(ws.root / "diag_out" / "report_bin_error.json"));
  CHECK(j.at("run").at("name") == "bin_prediction");
  CHECK(j.at("reference").at("metric") == "mse");
  CHECK(j.at("relative_increase_percent").is_number());
  const std::string csv = slurp(ws.root / "diag_out" / "report_bin_error.csv");
  CHECK(csv.rfind("role,mse_mean,mse_stddev,relative_increase_percent\n", 0) == 0);

  // Without a reference the mode cannot run.
  ordered_json no_ref = diag;
  no_ref["eval"]["reference_run"] = "";
  const fs::path nr_cfg = ws.write_config("diag_noref.json", no_ref);
  const CmdResult nr = run_cli("eval --config \"" + nr_cfg.string() + "\"", ws.root);
  CHECK(nr.exit_code == 1);
  CHECK(nr.err.find("reference_run") != std::string::npos);
}

TEST_CASE("grid sweeps cells, is resumable, and ranks a best cell") {
  Workspace ws;
  ordered_json cfg = ws.base_config("grid_out");
  cfg["grid"]["p_m"] = ordered_json::array({0.0});
  cfg["grid"]["bins"] = ordered_json::array({2, 3});
  cfg["grid"]["objectives"] = ordered_json::array({"value_recon", "bin_recon"});
  cfg["grid"]["modes"] = ordered_json::array({"none"});
  const fs::path c = ws.write_config("grid.json", cfg);
  const fs::path out = ws.root / "grid_out";

  const CmdResult r = run_cli("grid --config \"" + c.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("best cell: ") != std::string::npos);
  REQUIRE(fs::exists(out / "grid.csv"));
  REQUIRE(fs::exists(out / "best_config.json"));
  for (const char* name : {"value_recon_T2_pm0_none", "value_recon_T3_pm0_none",
                           "bin_recon_T2_pm0_none", "bin_recon_T3_pm0_none"}) {
    CHECK(fs::exists(out / "cells" / name / "report.json"));
    CHECK(fs::exists(out / "cells" / name / "report.csv"));
  }

  const std::string grid_table = slurp(out / "grid.csv");
  CHECK(grid_table.rfind(
            "cell,objective,bins,p_m,mode,status,val_metric,val_stddev,error\n",
            0) == 0);

  // The chosen cell's settings are folded back into a ready-to-run config.
  const auto best = ordered_json::parse(slurp(out / "best_config.json"));
  CHECK(best.at("binning").at("method") == "quantile");
  const std::string best_obj = best.at("losses")[0].at("objective");
  CHECK((best_obj == "value_recon" || best_obj == "bin_recon"));

  // Resuming over finished cells reproduces the same table and best config.
  const std::string best_text = slurp(out / "best_config.json");
  const CmdResult resumed =
      run_cli("grid --resume --config \"" + c.string() + "\"", ws.root);
  CHECK(resumed.exit_code == 0);
  CHECK(slurp(out / "grid.csv") == grid_table);
  CHECK(slurp(out / "best_config.json") == best_text);

  // So does a fresh rerun, including under a different worker count.
  const CmdResult threaded = run_cli("grid --config \"" + c.string() + "\"",
                                     ws.root, "TABBIN_THREADS=2");
  CHECK(threaded.exit_code == 0);
  CHECK(slurp(out / "grid.csv") == grid_table);

  // A failing cell is recorded and flips the exit code to 2.
  ordered_json bad = ws.base_config("grid_bad_out");
  bad["grid"]["p_m"] = ordered_json::array({0.0});
  bad["grid"]["bins"] = ordered_json::array({1});
  bad["grid"]["objectives"] = ordered_json::array({"bin_recon"});
  bad["grid"]["modes"] = ordered_json::array({"none"});
  const fs::path bc = ws.write_config("grid_bad.json", bad);
  const CmdResult fr = run_cli("grid --config \"" + bc.string() + "\"", ws.root);
  CHECK(fr.exit_code == 2);
  CHECK(fr.out.find("grid finished with failures") != std::string::npos);
  CHECK(fs::exists(ws.root / "grid_bad_out" / "cells" / "bin_recon_T1_pm0_none" /
                   "error.txt"));
}

TEST_CASE("ablate compares against a baseline and reuses finished runs") {
  Workspace ws;
  const fs::path cfg = ws.write_config("abl.json", ws.base_config("abl_out"));
  const fs::path out = ws.root / "abl_out";

  const CmdResult r = run_cli(
      "ablate --which bin_averages --config \"" + cfg.string() + "\"", ws.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("ablation bin_averages: baseline rmse=", 0) == 0);
  REQUIRE(fs::exists(out / "baseline" / "report.json"));
  REQUIRE(fs::exists(out / "ablate_bin_averages" / "report.json"));
  REQUIRE(fs::exists(out / "ablation_report.json"));
  REQUIRE(fs::exists(out / "ablation_report.csv"));

  const auto j = ordered_json::parse(slurp(out / "ablation_report.json"));
  CHECK(j.at("which") == "bin_averages");
  CHECK(j.at("metric") == "rmse");
  CHECK(j.at("baseline").at("name") == "linear_probe");
  CHECK(j.at("ablated").at("per_seed").size() == 2);
  const double baseline_mean = j.at("baseline").at("mean").get<double>();

  const std::string csv = slurp(out / "ablation_report.csv");
  CHECK(csv.rfind("variant,rmse_mean,rmse_stddev,relative_change_percent\n"
                  "baseline,", 0) == 0);
  CHECK(csv.find("\nbin_averages,") != std::string::npos);

  // A second variant in the same directory reuses the finished baseline: its
  // checkpoint can even disappear, only the report is needed.
  fs::remove(out / "baseline" / "checkpoint.tbck");
  const CmdResult second = run_cli(
      "ablate --which shuffle_order --config \"" + cfg.string() + "\"", ws.root);
  CHECK(second.exit_code == 0);
  REQUIRE(fs::exists(out / "ablate_shuffle_order" / "report.json"));
  const auto j2 = ordered_json::parse(slurp(out / "ablation_report.json"));
  CHECK(j2.at("which") == "shuffle_order");
  CHECK(j2.at("baseline").at("mean").get<double>() == baseline_mean);

  // equal_width swaps the binning method rather than the targets.
  const CmdResult ew = run_cli(
      "ablate --which equal_width --config \"" + cfg.string() + "\"", ws.root);
  CHECK(ew.exit_code == 0);
  REQUIRE(fs::exists(out / "ablate_equal_width" / "binning.spec"));
  const std::string base_spec = slurp(out / "baseline" / "binning.spec");
  CHECK(slurp(out / "ablate_equal_width" / "binning.spec") != base_spec);

  const CmdResult bw = run_cli(
      "ablate --which nonsense --config \"" + cfg.string() + "\"", ws.root);
  CHECK(bw.exit_code == 1);
  CHECK(bw.err.find("--which") != std::string::npos);
}

TEST_CASE("config and filesystem problems map to the documented exit codes") {
  Workspace ws;

  // Unknown keys are rejected with their dotted path.
  ordered_json bad = ws.base_config("junk_out");
  bad["dataset"]["pathz"] = "x";
  const fs::path bad_cfg = ws.write_config("bad.json", bad);
  const CmdResult unknown = run_cli("bin --config \"" + bad_cfg.string() + "\"",
                                    ws.root);
  CHECK(unknown.exit_code == 1);
  CHECK(unknown.err.find("dataset.pathz") != std::string::npos);

  // Missing config file.
  const CmdResult gone = run_cli(
      "bin --config \"" + (ws.root / "nope.json").string() + "\"", ws.root);
  CHECK(gone.exit_code == 1);

  // Missing required --config flag is a usage error.
  const CmdResult usage = run_cli("bin", ws.root);
  CHECK(usage.exit_code == 1);

  // An output directory that cannot be created is an environment failure.
  spit(ws.root / "plain.txt", "just a file\n");
  const fs::path cfg = ws.write_config("ok.json", ws.base_config("ok_out"));
  const CmdResult blocked = run_cli(
      "bin --config \"" + cfg.string() + "\" --out \"" +
          (ws.root / "plain.txt" / "sub").string() + "\"",
      ws.root);
  CHECK(blocked.exit_code == 2);
  CHECK(blocked.err.rfind("failure: ", 0) == 0);
}
