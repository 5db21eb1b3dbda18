// Python bindings for the core pipeline: datasets, binning, corruption,
// losses, pretraining, and the evaluation probes. Arrays cross the boundary
// as copies; all math stays in the C++ core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tabbin/binning.hpp"
#include "tabbin/corruption.hpp"
#include "tabbin/dataset.hpp"
#include "tabbin/errors.hpp"
#include "tabbin/evaluate.hpp"
#include "tabbin/losses.hpp"
#include "tabbin/matrix.hpp"
#include "tabbin/rng.hpp"
#include "tabbin/standardize.hpp"
#include "tabbin/synthetic.hpp"
#include "tabbin/train.hpp"

namespace py = pybind11;
using namespace tabbin;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix matrix_from_array(const DoubleArray& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw ValidationError("expected a 2-d array");
  Matrix m(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]));
  std::memcpy(m.data(), buf.ptr, m.size() * sizeof(double));
  return m;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
  py::array_t<double> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data(), m.size() * sizeof(double));
  return arr;
}

py::array_t<int> array_from_int_matrix(const IntMatrix& m) {
  py::array_t<int> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data(),
              static_cast<std::size_t>(m.rows()) * m.cols() * sizeof(int));
  return arr;
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split: '" + s + "'");
}

// Dataset bundled with the standardizer fitted on its train split.
struct PyDataset {
  Dataset ds;
  Standardizer stdz;
};

PyDataset finish_dataset(Dataset ds, double train_frac, double val_frac,
                         double test_frac, std::uint64_t split_seed,
                         int categorical_threshold) {
  assign_splits_ratio(ds, train_frac, val_frac, test_frac, split_seed);
  compute_feature_meta(ds, categorical_threshold);
  Standardizer stdz = Standardizer::fit(ds);
  return {std::move(ds), std::move(stdz)};
}

// Pretrained model plus the standardizer it was trained under.
struct PyEncoder {
  SslModel model;
  Standardizer stdz;
  std::vector<std::string> log;
};

std::vector<LossTerm> parse_losses(const py::iterable& losses) {
  std::vector<LossTerm> terms;
  for (py::handle item : losses) {
    if (py::isinstance<py::str>(item)) {
      terms.push_back({objective_from_string(item.cast<std::string>()), 1.0});
    } else {
      const auto pair = item.cast<std::pair<std::string, double>>();
      terms.push_back({objective_from_string(pair.first), pair.second});
    }
  }
  return terms;
}

ProbeConfig make_probe_config(double lr, int epochs, int seeds,
                              double weight_decay, int batch_size, bool frozen) {
  ProbeConfig probe;
  probe.lr = lr;
  probe.epochs = epochs;
  probe.seeds = seeds;
  probe.weight_decay = weight_decay;
  probe.batch_size = batch_size;
  probe.frozen = frozen;
  return probe;
}

py::dict report_to_dict(const RunReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["metric"] = r.metric;
  d["per_seed"] = r.per_seed;
  d["mean"] = r.mean;
  d["stddev"] = r.stddev;
  if (r.has_original_units) {
    d["per_seed_original"] = r.per_seed_original;
    d["mean_original"] = r.mean_original;
    d["stddev_original"] = r.stddev_original;
  }
  return d;
}

py::tuple loss_tuple(const LossResult& r) {
  return py::make_tuple(r.value, array_from_matrix(r.grad));
}

}  // namespace

PYBIND11_MODULE(_tabbin, m) {
  m.doc() = "Self-supervised tabular learning with bin-based pretext tasks";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  py::class_<PyDataset>(m, "Dataset")
      .def_static(
          "from_arrays",
          [](const DoubleArray& features, const DoubleArray& labels,
             const std::string& task, double train_frac, double val_frac,
             double test_frac, std::uint64_t split_seed,
             int categorical_threshold) {
            const auto buf = labels.request();
            if (buf.ndim != 1) throw ValidationError("labels must be 1-d");
            std::vector<double> y(static_cast<const double*>(buf.ptr),
                                  static_cast<const double*>(buf.ptr) + buf.shape[0]);
            Dataset ds = make_dataset(matrix_from_array(features), std::move(y),
                                      task_from_string(task));
            return finish_dataset(std::move(ds), train_frac, val_frac, test_frac,
                                  split_seed, categorical_threshold);
          },
          py::arg("features"), py::arg("labels"), py::arg("task") = "regression",
          py::arg("train_frac") = 0.64, py::arg("val_frac") = 0.16,
          py::arg("test_frac") = 0.2, py::arg("split_seed") = 0,
          py::arg("categorical_threshold") = 20)
      .def_static(
          "from_csv",
          [](const std::string& path, const std::string& task,
             const std::string& label_column, double train_frac, double val_frac,
             double test_frac, std::uint64_t split_seed,
             int categorical_threshold) {
            Dataset ds = load_csv(path, task_from_string(task), label_column);
            return finish_dataset(std::move(ds), train_frac, val_frac, test_frac,
                                  split_seed, categorical_threshold);
          },
          py::arg("path"), py::arg("task") = "regression",
          py::arg("label_column") = "label", py::arg("train_frac") = 0.64,
          py::arg("val_frac") = 0.16, py::arg("test_frac") = 0.2,
          py::arg("split_seed") = 0, py::arg("categorical_threshold") = 20)
      .def_static(
          "synthetic",
          [](int n, int d, int steps, double noise_std, bool classification,
             std::uint64_t seed, double train_frac, double val_frac,
             double test_frac, std::uint64_t split_seed,
             int categorical_threshold) {
            SyntheticConfig cfg;
            cfg.n = n;
            cfg.d = d;
            cfg.steps = steps;
            cfg.noise_std = noise_std;
            cfg.classification = classification;
            cfg.seed = seed;
            return finish_dataset(make_synthetic(cfg), train_frac, val_frac,
                                  test_frac, split_seed, categorical_threshold);
          },
          py::arg("n") = 4000, py::arg("d") = 8, py::arg("steps") = 5,
          py::arg("noise_std") = 0.1, py::arg("classification") = false,
          py::arg("seed") = 0, py::arg("train_frac") = 0.64,
          py::arg("val_frac") = 0.16, py::arg("test_frac") = 0.2,
          py::arg("split_seed") = 0, py::arg("categorical_threshold") = 20)
      .def_property_readonly("n_rows",
                             [](const PyDataset& p) { return p.ds.n_rows(); })
      .def_property_readonly("n_features",
                             [](const PyDataset& p) { return p.ds.n_features(); })
      .def_property_readonly("task",
                             [](const PyDataset& p) { return to_string(p.ds.task); })
      .def_property_readonly("num_classes",
                             [](const PyDataset& p) { return p.ds.num_classes; })
      .def_property_readonly(
          "feature_means",
          [](const PyDataset& p) { return p.stdz.means(); })
      .def_property_readonly(
          "feature_stds",
          [](const PyDataset& p) { return p.stdz.stds(); })
      .def("features",
           [](const PyDataset& p) { return array_from_matrix(p.ds.features); })
      .def("labels", [](const PyDataset& p) { return p.ds.labels; })
      .def(
          "rows_of",
          [](const PyDataset& p, const std::string& split) {
            return p.ds.rows_of(split_from_string(split));
          },
          py::arg("split"))
      .def(
          "features_of",
          [](const PyDataset& p, const std::string& split) {
            return array_from_matrix(p.ds.features_of(split_from_string(split)));
          },
          py::arg("split"))
      .def(
          "labels_of",
          [](const PyDataset& p, const std::string& split) {
            return p.ds.labels_of(split_from_string(split));
          },
          py::arg("split"))
      .def("standardized",
           [](const PyDataset& p) {
             return array_from_matrix(p.stdz.transform_all(p.ds));
           })
      .def("__repr__", [](const PyDataset& p) {
        return "<tabbin.Dataset " + std::to_string(p.ds.n_rows()) + "x" +
               std::to_string(p.ds.n_features()) + " " + to_string(p.ds.task) + ">";
      });

  py::class_<BinningSpec>(m, "Binning")
      .def_static(
          "fit",
          [](const PyDataset& p, const std::string& method, int bins) {
            return fit_binning(p.ds, bin_method_from_string(method), bins);
          },
          py::arg("dataset"), py::arg("method") = "quantile", py::arg("bins") = 10)
      .def_property_readonly("method",
                             [](const BinningSpec& s) { return to_string(s.method); })
      .def_property_readonly("requested_bins",
                             [](const BinningSpec& s) { return s.requested_bins; })
      .def_property_readonly("n_features", &BinningSpec::n_features)
      .def_property_readonly("max_bins", &BinningSpec::max_bins)
      .def(
          "boundaries",
          [](const BinningSpec& s, int feature) {
            if (feature < 0 || feature >= s.n_features())
              throw ValidationError("feature index out of range");
            return s.features[static_cast<std::size_t>(feature)].boundaries;
          },
          py::arg("feature"))
      .def(
          "bin_count",
          [](const BinningSpec& s, int feature) {
            if (feature < 0 || feature >= s.n_features())
              throw ValidationError("feature index out of range");
            return s.features[static_cast<std::size_t>(feature)].bin_count;
          },
          py::arg("feature"))
      .def(
          "assign",
          [](const BinningSpec& s, const DoubleArray& raw) {
            return array_from_int_matrix(
                assign_bins_matrix(matrix_from_array(raw), s));
          },
          py::arg("raw"), "1-based bin index of every cell")
      .def(
          "targets",
          [](const BinningSpec& s, const DoubleArray& raw,
             const std::string& ablation, std::uint64_t seed) {
            const BinAblation abl = ablation_from_string(ablation);
            if (abl == BinAblation::per_value)
              throw ValidationError(
                  "per_value targets need a refit; use Binning.fit(ds, 'per_value')");
            return array_from_matrix(
                bin_targets(matrix_from_array(raw), s, abl, seed));
          },
          py::arg("raw"), py::arg("ablation") = "none", py::arg("seed") = 0)
      .def(
          "one_hot",
          [](const BinningSpec& s, const DoubleArray& raw) {
            return array_from_matrix(one_hot_matrix(
                assign_bins_matrix(matrix_from_array(raw), s), s.max_bins()));
          },
          py::arg("raw"))
      .def("serialize", [](const BinningSpec& s) { return serialize_binning(s); })
      .def_static("parse",
                  [](const std::string& text) { return parse_binning(text); },
                  py::arg("text"))
      .def("save",
           [](const BinningSpec& s, const std::string& path) {
             save_binning(s, path);
           },
           py::arg("path"))
      .def_static("load",
                  [](const std::string& path) { return load_binning(path); },
                  py::arg("path"))
      .def("__repr__", [](const BinningSpec& s) {
        return "<tabbin.Binning " + to_string(s.method) + " T=" +
               std::to_string(s.requested_bins) + " features=" +
               std::to_string(s.n_features()) + ">";
      });

  py::class_<PyEncoder>(m, "Encoder")
      .def(
          "encode",
          [](const PyEncoder& e, const DoubleArray& raw) {
            return array_from_matrix(
                e.model.encode(e.stdz.transform(matrix_from_array(raw))));
          },
          py::arg("raw"), "Representations for raw feature rows")
      .def_property_readonly("log",
                             [](const PyEncoder& e) { return e.log; })
      .def(
          "save",
          [](const PyEncoder& e, const std::string& path) {
            save_model(e.model, path);
          },
          py::arg("path"))
      .def("__repr__", [](const PyEncoder& e) {
        return "<tabbin.Encoder params=" +
               std::to_string(e.model.encoder.param_count()) + ">";
      });

  m.def(
      "pretrain",
      [](const PyDataset& data, const py::iterable& losses,
         const BinningSpec* binning, int depth, int width, int head_embed,
         int epochs, double lr, double weight_decay, int batch_size, double p_m,
         const std::string& mode, const std::string& ablation,
         std::uint64_t seed) {
        SslRunConfig cfg;
        cfg.depth = depth;
        cfg.width = width;
        cfg.head_embed = head_embed;
        cfg.epochs = epochs;
        cfg.base_lr = lr;
        cfg.weight_decay = weight_decay;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        cfg.corruption.p_m = p_m;
        cfg.corruption.mode = replacement_from_string(mode);
        cfg.losses = parse_losses(losses);
        cfg.ablation = ablation_from_string(ablation);
        PretrainResult result = pretrain(data.ds, data.stdz, binning, cfg);
        return PyEncoder{std::move(result.model), data.stdz,
                         std::move(result.log)};
      },
      py::arg("dataset"), py::arg("losses") = py::make_tuple("bin_recon"),
      py::arg("binning") = nullptr, py::arg("depth") = 2, py::arg("width") = 256,
      py::arg("head_embed") = 8, py::arg("epochs") = 1000, py::arg("lr") = 1e-4,
      py::arg("weight_decay") = 1e-5, py::arg("batch_size") = 0,
      py::arg("p_m") = 0.0, py::arg("mode") = "none",
      py::arg("ablation") = "none", py::arg("seed") = 0,
      "Self-supervised pretraining; returns the trained encoder");

  m.def(
      "linear_probe",
      [](const PyEncoder& encoder, const PyDataset& data, double lr, int epochs,
         int seeds, double weight_decay, int batch_size, std::uint64_t seed,
         const std::string& eval_split) {
        return report_to_dict(linear_probe(
            encoder.model.encoder, data.ds, data.stdz,
            make_probe_config(lr, epochs, seeds, weight_decay, batch_size, true),
            seed, split_from_string(eval_split)));
      },
      py::arg("encoder"), py::arg("dataset"), py::arg("lr") = 0.01,
      py::arg("epochs") = 100, py::arg("seeds") = 10,
      py::arg("weight_decay") = 1e-5, py::arg("batch_size") = 0,
      py::arg("seed") = 0, py::arg("eval_split") = "test",
      "Affine probe on frozen representations");

  m.def(
      "finetune",
      [](const PyEncoder& encoder, const PyDataset& data, double lr, int epochs,
         int seeds, double weight_decay, int batch_size, std::uint64_t seed,
         const std::string& eval_split) {
        return report_to_dict(finetune(
            encoder.model.encoder, data.ds, data.stdz,
            make_probe_config(lr, epochs, seeds, weight_decay, batch_size, false),
            seed, split_from_string(eval_split)));
      },
      py::arg("encoder"), py::arg("dataset"), py::arg("lr") = 1e-3,
      py::arg("epochs") = 50, py::arg("seeds") = 10,
      py::arg("weight_decay") = 1e-5, py::arg("batch_size") = 0,
      py::arg("seed") = 0, py::arg("eval_split") = "test",
      "Supervised fine-tuning of a per-seed encoder copy");

  m.def(
      "bin_prediction_probe",
      [](const PyEncoder& encoder, const PyDataset& data,
         const BinningSpec& binning, double lr, int epochs, int seeds,
         double weight_decay, int batch_size, std::uint64_t seed,
         const std::string& eval_split) {
        return report_to_dict(bin_prediction_probe(
            encoder.model.encoder, data.ds, data.stdz, binning,
            make_probe_config(lr, epochs, seeds, weight_decay, batch_size, true),
            seed, split_from_string(eval_split)));
      },
      py::arg("encoder"), py::arg("dataset"), py::arg("binning"),
      py::arg("lr") = 0.01, py::arg("epochs") = 100, py::arg("seeds") = 10,
      py::arg("weight_decay") = 1e-5, py::arg("batch_size") = 0,
      py::arg("seed") = 0, py::arg("eval_split") = "test",
      "How well frozen representations regress the bin indices");

  m.def(
      "corrupt",
      [](const DoubleArray& batch, double p_m, const std::string& mode,
         std::uint64_t seed, const std::optional<std::vector<double>>& constant) {
        CorruptionConfig cfg;
        cfg.p_m = p_m;
        cfg.mode = replacement_from_string(mode);
        if (constant) cfg.constant_vector = *constant;
        Rng rng(seed);
        const CorruptedBatch out = corrupt(matrix_from_array(batch), cfg, rng);
        return py::make_tuple(array_from_matrix(out.corrupted),
                              array_from_matrix(out.mask));
      },
      py::arg("batch"), py::arg("p_m"), py::arg("mode") = "random",
      py::arg("seed") = 0, py::arg("constant") = py::none(),
      "Masked corruption; returns (corrupted, mask)");

  m.def(
      "value_recon_loss",
      [](const DoubleArray& pred, const DoubleArray& target) {
        return loss_tuple(
            value_recon_loss(matrix_from_array(pred), matrix_from_array(target)));
      },
      py::arg("pred"), py::arg("target"));

  m.def(
      "bin_recon_loss",
      [](const DoubleArray& pred, const DoubleArray& targets) {
        return loss_tuple(
            bin_recon_loss(matrix_from_array(pred), matrix_from_array(targets)));
      },
      py::arg("pred"), py::arg("targets"));

  m.def(
      "mask_xent_loss",
      [](const DoubleArray& logits, const DoubleArray& mask) {
        return loss_tuple(
            mask_xent_loss(matrix_from_array(logits), matrix_from_array(mask)));
      },
      py::arg("logits"), py::arg("mask"));

  m.def(
      "bin_xent_loss",
      [](const DoubleArray& logits, const DoubleArray& one_hot, int bins) {
        return loss_tuple(bin_xent_loss(matrix_from_array(logits),
                                        matrix_from_array(one_hot), bins));
      },
      py::arg("logits"), py::arg("one_hot"), py::arg("bins"));

  m.def(
      "softmax_xent_loss",
      [](const DoubleArray& logits, const std::vector<int>& labels) {
        return loss_tuple(softmax_xent_loss(matrix_from_array(logits), labels));
      },
      py::arg("logits"), py::arg("labels"));

  m.def("batch_size_rule", &batch_size_rule, py::arg("n_train"),
        "Batch size as a function of the training set size");
}
