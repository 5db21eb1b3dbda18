#include "tabbin/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tabbin/errors.hpp"

namespace tabbin {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ValidationError("config: " + path + " " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(path, "must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ValidationError("config: unknown key '" +
                            (path.empty() ? key : path + "." + key) + "'");
}

template <typename T>
void get_field(const json& obj, const std::string& path, const char* key,
               T& target) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(target);
  } catch (const json::exception&) {
    bad(path + "." + key, "has the wrong type");
  }
}

void get_u64(const json& obj, const std::string& path, const char* key,
             std::uint64_t& target) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    bad(path + "." + key, "must be a non-negative integer");
  // Values above INT64_MAX parse as unsigned; only signed storage can
  // actually be negative.
  if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)
    bad(path + "." + key, "must be a non-negative integer");
  target = v.get<std::uint64_t>();
}

SplitSection parse_split(const json& obj, const std::string& path) {
  SplitSection s;
  check_keys(obj, path,
             {"mode", "train_fraction", "val_fraction", "test_fraction",
              "train_file", "val_file", "test_file"});
  get_field(obj, path, "mode", s.mode);
  if (s.mode != "ratio" && s.mode != "files")
    bad(path + ".mode", "must be 'ratio' or 'files'");
  get_field(obj, path, "train_fraction", s.train_fraction);
  get_field(obj, path, "val_fraction", s.val_fraction);
  get_field(obj, path, "test_fraction", s.test_fraction);
  get_field(obj, path, "train_file", s.train_file);
  get_field(obj, path, "val_file", s.val_file);
  get_field(obj, path, "test_file", s.test_file);
  return s;
}

DatasetSection parse_dataset(const json& obj, const std::string& path) {
  DatasetSection d;
  check_keys(obj, path,
             {"path", "task", "label_column", "split", "categorical_threshold"});
  if (!obj.contains("path")) bad(path + ".path", "is required");
  if (!obj.contains("task")) bad(path + ".task", "is required");
  get_field(obj, path, "path", d.path);
  get_field(obj, path, "task", d.task);
  task_from_string(d.task);  // fail early on bad values
  get_field(obj, path, "label_column", d.label_column);
  if (obj.contains("split")) d.split = parse_split(obj.at("split"), path + ".split");
  get_field(obj, path, "categorical_threshold", d.categorical_threshold);
  return d;
}

std::vector<LossSection> parse_losses(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty())
    bad(path, "must be a non-empty array of loss terms");
  std::vector<LossSection> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    LossSection term;
    check_keys(arr[i], p, {"objective", "weight"});
    get_field(arr[i], p, "objective", term.objective);
    objective_from_string(term.objective);
    get_field(arr[i], p, "weight", term.weight);
    out.push_back(term);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"dataset", "binning", "corruption", "model", "losses", "train",
              "probe", "finetune", "grid", "eval", "ablate", "seed",
              "output_dir"});

  ExperimentConfig cfg;
  if (!root.contains("dataset")) bad("dataset", "section is required");
  cfg.dataset = parse_dataset(root.at("dataset"), "dataset");

  if (root.contains("binning")) {
    const auto& b = root.at("binning");
    check_keys(b, "binning", {"method", "bins"});
    get_field(b, "binning", "method", cfg.binning.method);
    bin_method_from_string(cfg.binning.method);
    get_field(b, "binning", "bins", cfg.binning.bins);
  }
  if (root.contains("corruption")) {
    const auto& c = root.at("corruption");
    check_keys(c, "corruption", {"mode", "p_m"});
    get_field(c, "corruption", "mode", cfg.corruption.mode);
    replacement_from_string(cfg.corruption.mode);
    get_field(c, "corruption", "p_m", cfg.corruption.p_m);
  }
  if (root.contains("model")) {
    const auto& m = root.at("model");
    check_keys(m, "model", {"depth", "width", "head_embed"});
    get_field(m, "model", "depth", cfg.model.depth);
    get_field(m, "model", "width", cfg.model.width);
    get_field(m, "model", "head_embed", cfg.model.head_embed);
  }
  if (root.contains("losses")) cfg.losses = parse_losses(root.at("losses"), "losses");
  if (root.contains("train")) {
    const auto& t = root.at("train");
    check_keys(t, "train", {"epochs", "lr", "weight_decay", "batch_size"});
    get_field(t, "train", "epochs", cfg.train.epochs);
    get_field(t, "train", "lr", cfg.train.lr);
    get_field(t, "train", "weight_decay", cfg.train.weight_decay);
    get_field(t, "train", "batch_size", cfg.train.batch_size);
  }
  if (root.contains("probe")) {
    const auto& p = root.at("probe");
    check_keys(p, "probe", {"lr", "epochs", "seeds", "weight_decay", "batch_size"});
    get_field(p, "probe", "lr", cfg.probe.lr);
    get_field(p, "probe", "epochs", cfg.probe.epochs);
    get_field(p, "probe", "seeds", cfg.probe.seeds);
    get_field(p, "probe", "weight_decay", cfg.probe.weight_decay);
    get_field(p, "probe", "batch_size", cfg.probe.batch_size);
  }
  if (root.contains("finetune")) {
    const auto& f = root.at("finetune");
    check_keys(f, "finetune", {"lr", "epochs"});
    get_field(f, "finetune", "lr", cfg.finetune.lr);
    get_field(f, "finetune", "epochs", cfg.finetune.epochs);
  }
  if (root.contains("grid")) {
    const auto& g = root.at("grid");
    check_keys(g, "grid", {"p_m", "bins", "objectives", "modes"});
    get_field(g, "grid", "p_m", cfg.grid.p_m);
    get_field(g, "grid", "bins", cfg.grid.bins);
    get_field(g, "grid", "objectives", cfg.grid.objectives);
    get_field(g, "grid", "modes", cfg.grid.modes);
    for (const auto& o : cfg.grid.objectives) objective_from_string(o);
    for (const auto& m : cfg.grid.modes) replacement_from_string(m);
  }
  if (root.contains("eval")) {
    const auto& e = root.at("eval");
    check_keys(e, "eval", {"mode", "run", "reference_run"});
    get_field(e, "eval", "mode", cfg.eval.mode);
    if (cfg.eval.mode != "probe" && cfg.eval.mode != "finetune" &&
        cfg.eval.mode != "bin_error" && cfg.eval.mode != "pca")
      bad("eval.mode", "must be probe, finetune, bin_error, or pca");
    get_field(e, "eval", "run", cfg.eval.run);
    get_field(e, "eval", "reference_run", cfg.eval.reference_run);
  }
  if (root.contains("ablate")) {
    const auto& a = root.at("ablate");
    check_keys(a, "ablate", {"which"});
    get_field(a, "ablate", "which", cfg.ablate.which);
    if (cfg.ablate.which != "shuffle_order" && cfg.ablate.which != "bin_averages" &&
        cfg.ablate.which != "per_value" && cfg.ablate.which != "equal_width")
      bad("ablate.which",
          "must be shuffle_order, bin_averages, per_value, or equal_width");
  }
  get_u64(root, "", "seed", cfg.seed);
  get_field(root, "", "output_dir", cfg.output_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  ordered_json j;
  j["dataset"]["path"] = cfg.dataset.path;
  j["dataset"]["task"] = cfg.dataset.task;
  j["dataset"]["label_column"] = cfg.dataset.label_column;
  j["dataset"]["split"]["mode"] = cfg.dataset.split.mode;
  j["dataset"]["split"]["train_fraction"] = cfg.dataset.split.train_fraction;
  j["dataset"]["split"]["val_fraction"] = cfg.dataset.split.val_fraction;
  j["dataset"]["split"]["test_fraction"] = cfg.dataset.split.test_fraction;
  j["dataset"]["split"]["train_file"] = cfg.dataset.split.train_file;
  j["dataset"]["split"]["val_file"] = cfg.dataset.split.val_file;
  j["dataset"]["split"]["test_file"] = cfg.dataset.split.test_file;
  j["dataset"]["categorical_threshold"] = cfg.dataset.categorical_threshold;
  j["binning"]["method"] = cfg.binning.method;
  j["binning"]["bins"] = cfg.binning.bins;
  j["corruption"]["mode"] = cfg.corruption.mode;
  j["corruption"]["p_m"] = cfg.corruption.p_m;
  j["model"]["depth"] = cfg.model.depth;
  j["model"]["width"] = cfg.model.width;
  j["model"]["head_embed"] = cfg.model.head_embed;
  j["losses"] = ordered_json::array();
  for (const auto& term : cfg.losses)
    j["losses"].push_back({{"objective", term.objective}, {"weight", term.weight}});
  j["train"]["epochs"] = cfg.train.epochs;
  j["train"]["lr"] = cfg.train.lr;
  j["train"]["weight_decay"] = cfg.train.weight_decay;
  j["train"]["batch_size"] = cfg.train.batch_size;
  j["probe"]["lr"] = cfg.probe.lr;
  j["probe"]["epochs"] = cfg.probe.epochs;
  j["probe"]["seeds"] = cfg.probe.seeds;
  j["probe"]["weight_decay"] = cfg.probe.weight_decay;
  j["probe"]["batch_size"] = cfg.probe.batch_size;
  j["finetune"]["lr"] = cfg.finetune.lr;
  j["finetune"]["epochs"] = cfg.finetune.epochs;
  j["grid"]["p_m"] = cfg.grid.p_m;
  j["grid"]["bins"] = cfg.grid.bins;
  j["grid"]["objectives"] = cfg.grid.objectives;
  j["grid"]["modes"] = cfg.grid.modes;
  j["eval"]["mode"] = cfg.eval.mode;
  j["eval"]["run"] = cfg.eval.run;
  j["eval"]["reference_run"] = cfg.eval.reference_run;
  j["ablate"]["which"] = cfg.ablate.which;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset ds = load_csv(cfg.dataset.path, task_from_string(cfg.dataset.task),
                        cfg.dataset.label_column);
  if (cfg.dataset.split.mode == "files") {
    if (cfg.dataset.split.train_file.empty() ||
        cfg.dataset.split.val_file.empty() || cfg.dataset.split.test_file.empty())
      throw ValidationError(
          "config: dataset.split mode 'files' needs train/val/test index files");
    assign_splits_files(ds, cfg.dataset.split.train_file,
                        cfg.dataset.split.val_file, cfg.dataset.split.test_file);
  } else {
    assign_splits_ratio(ds, cfg.dataset.split.train_fraction,
                        cfg.dataset.split.val_fraction,
                        cfg.dataset.split.test_fraction, cfg.seed);
  }
  compute_feature_meta(ds, cfg.dataset.categorical_threshold);
  return ds;
}

SslRunConfig to_ssl_config(const ExperimentConfig& cfg) {
  SslRunConfig ssl;
  ssl.depth = cfg.model.depth;
  ssl.width = cfg.model.width;
  ssl.head_embed = cfg.model.head_embed;
  ssl.epochs = cfg.train.epochs;
  ssl.base_lr = cfg.train.lr;
  ssl.weight_decay = cfg.train.weight_decay;
  ssl.batch_size = cfg.train.batch_size;
  ssl.seed = cfg.seed;
  ssl.corruption.mode = replacement_from_string(cfg.corruption.mode);
  ssl.corruption.p_m = cfg.corruption.p_m;
  ssl.losses.clear();
  for (const auto& term : cfg.losses)
    ssl.losses.push_back({objective_from_string(term.objective), term.weight});
  return ssl;
}

ProbeConfig to_probe_config(const ExperimentConfig& cfg) {
  ProbeConfig probe;
  probe.lr = cfg.probe.lr;
  probe.epochs = cfg.probe.epochs;
  probe.seeds = cfg.probe.seeds;
  probe.weight_decay = cfg.probe.weight_decay;
  probe.batch_size = cfg.probe.batch_size;
  return probe;
}

GridAxes to_grid_axes(const ExperimentConfig& cfg) {
  GridAxes axes;
  axes.p_m = cfg.grid.p_m;
  axes.bins = cfg.grid.bins;
  axes.objectives.clear();
  for (const auto& o : cfg.grid.objectives)
    axes.objectives.push_back(objective_from_string(o));
  axes.modes.clear();
  for (const auto& m : cfg.grid.modes)
    axes.modes.push_back(replacement_from_string(m));
  return axes;
}

}  // namespace tabbin
