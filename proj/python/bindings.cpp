// Python bindings for the core operations: dataset generation, training,
// evaluation, manifold geometry, and the transfer-bound report.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "json.hpp"
#include "maada/analysis.hpp"
#include "maada/io.hpp"
#include "maada/losses.hpp"
#include "maada/perturb.hpp"
#include "maada/rng.hpp"
#include "maada/trainer.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

maada::Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw maada::DimensionError("expected a 2-D array");
  const std::size_t rows = static_cast<std::size_t>(arr.shape(0));
  const std::size_t cols = static_cast<std::size_t>(arr.shape(1));
  std::vector<double> data(arr.data(), arr.data() + rows * cols);
  return maada::Matrix(rows, cols, std::move(data));
}

py::array_t<double> matrix_to_array(const maada::Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

// JSON <-> python object bridge through the stdlib json module, so the
// schemas stay identical to the CLI's.
py::object json_to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json py_to_json(const py::object& obj) {
  const std::string dumped =
      py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(dumped);
}

maada::Dataset make_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                            const std::vector<int>& labels,
                            const std::vector<std::string>& domains, const std::string& name) {
  maada::Dataset ds;
  ds.x = matrix_from_array(x);
  ds.labels = labels;
  for (const std::string& d : domains) {
    if (d == "source") {
      ds.domains.push_back(maada::Domain::kSource);
    } else if (d == "target") {
      ds.domains.push_back(maada::Domain::kTarget);
    } else {
      throw maada::DataError("domain must be 'source' or 'target', got '" + d + "'");
    }
  }
  ds.name = name;
  ds.validate();
  return ds;
}

py::dict metrics_to_py(const maada::MetricsLog& log) {
  py::list records;
  for (const maada::EpochRecord& r : log.records) {
    records.append(json_to_py(maada::epoch_record_to_json(r)));
  }
  py::dict out;
  out["records"] = records;
  return out;
}

}  // namespace

PYBIND11_MODULE(_maada, m) {
  m.doc() = "Manifold-aware adversarial data augmentation for domain transfer";
  m.attr("__version__") = MAADA_VERSION;
  m.attr("PRNG_ALGORITHM") = maada::Rng::kAlgorithmId;

  py::register_exception<maada::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<maada::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<maada::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<maada::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<maada::TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<maada::EvalError>(m, "EvalError", PyExc_RuntimeError);

  py::class_<maada::Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("labels"), py::arg("domains"),
           py::arg("name") = "dataset")
      .def_property_readonly("x", [](const maada::Dataset& ds) { return matrix_to_array(ds.x); })
      .def_property_readonly("labels", [](const maada::Dataset& ds) { return ds.labels; })
      .def_property_readonly("domains",
                             [](const maada::Dataset& ds) {
                               std::vector<std::string> out;
                               for (maada::Domain d : ds.domains)
                                 out.push_back(maada::domain_name(d));
                               return out;
                             })
      .def_readwrite("name", &maada::Dataset::name)
      .def("__len__", &maada::Dataset::size);

  py::class_<maada::ModelParams>(m, "ModelParams")
      .def_property_readonly("layer_sizes", &maada::ModelParams::layer_sizes);

  m.def(
      "gen_two_moons",
      [](std::size_t n, double noise, std::uint64_t seed) {
        return maada::gen_two_moons(n, noise, seed);
      },
      py::arg("n"), py::arg("noise") = 0.1, py::arg("seed") = 0);
  m.def(
      "gen_circle",
      [](std::size_t n, double radius, std::uint64_t seed) {
        return maada::gen_circle(n, radius, seed);
      },
      py::arg("n"), py::arg("radius") = 1.0, py::arg("seed") = 0);
  m.def(
      "rotate",
      [](const maada::Dataset& ds, double theta, const std::optional<std::string>& retag,
         bool drop_labels) {
        std::optional<maada::Domain> domain;
        if (retag) {
          domain = *retag == "target" ? maada::Domain::kTarget : maada::Domain::kSource;
        }
        return maada::rotate(ds, theta, domain, drop_labels);
      },
      py::arg("dataset"), py::arg("theta"), py::arg("retag") = std::nullopt,
      py::arg("drop_labels") = false);
  m.def("save_csv", &maada::save_csv, py::arg("dataset"), py::arg("path"));
  m.def("load_csv", &maada::load_csv, py::arg("path"));

  m.def(
      "init_mlp",
      [](const std::vector<std::size_t>& sizes, std::uint64_t seed) {
        return maada::init_mlp(sizes, seed);
      },
      py::arg("layer_sizes"), py::arg("seed") = 0);
  m.def(
      "predict_proba",
      [](const maada::ModelParams& params,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return matrix_to_array(maada::predict_proba(params, matrix_from_array(x)));
      },
      py::arg("params"), py::arg("x"));
  m.def(
      "cross_entropy",
      [](const maada::ModelParams& params,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::vector<int>& labels) {
        return maada::cross_entropy(params, matrix_from_array(x), labels);
      },
      py::arg("params"), py::arg("x"), py::arg("labels"));

  m.def(
      "mmd_rbf",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
         const std::optional<double>& bandwidth) {
        const maada::Matrix ma = matrix_from_array(a);
        const maada::Matrix mb = matrix_from_array(b);
        return bandwidth ? maada::mmd_rbf(ma, mb, *bandwidth) : maada::mmd_rbf_median(ma, mb);
      },
      py::arg("a"), py::arg("b"), py::arg("bandwidth") = std::nullopt,
      "Biased-estimator squared MMD with a Gaussian kernel; median-heuristic "
      "bandwidth when none is given.");

  m.def(
      "geo_discrepancy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& source,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& target, int k,
         int m_dim) {
        const maada::GeoDBreakdown geod =
            maada::geo_discrepancy(matrix_from_array(source), matrix_from_array(target), k,
                                   m_dim);
        return json_to_py(maada::geod_to_json(geod));
      },
      py::arg("source"), py::arg("target"), py::arg("k") = 10, py::arg("m") = 1,
      "Directed geodesic discrepancy breakdown from source to target.");

  m.def(
      "decompose",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& gradient,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& basis) {
        maada::TangentChart chart;
        chart.basis = matrix_from_array(basis);
        std::vector<double> g(gradient.data(), gradient.data() + gradient.size());
        auto [on, off] = maada::decompose(g, chart);
        return py::make_tuple(py::cast(on), py::cast(off));
      },
      py::arg("gradient"), py::arg("basis"),
      "Split a gradient into its tangent projection and the residual.");

  m.def(
      "train",
      [](const py::dict& config, const maada::Dataset& source, const maada::Dataset& target) {
        const maada::TrainConfig cfg = maada::config_from_json(py_to_json(config));
        maada::TrainResult result = maada::train(cfg, source, target);
        return py::make_tuple(py::cast(std::move(result.params)), metrics_to_py(result.log));
      },
      py::arg("config"), py::arg("source"), py::arg("target"));
  m.def(
      "train_erm",
      [](const py::dict& config, const maada::Dataset& data) {
        const maada::TrainConfig cfg = maada::config_from_json(py_to_json(config));
        maada::TrainResult result = maada::train_erm(cfg, data);
        return py::make_tuple(py::cast(std::move(result.params)), metrics_to_py(result.log));
      },
      py::arg("config"), py::arg("data"));
  m.def("evaluate", &maada::evaluate, py::arg("params"), py::arg("dataset"),
        "Returns (accuracy, mean cross-entropy) on a labeled dataset.");
  m.def(
      "measure_epsilon_c",
      [](const maada::ModelParams& params, const maada::Dataset& points, double alpha, int k,
         int m_dim) { return maada::measure_epsilon_c(params, points, alpha, k, m_dim); },
      py::arg("params"), py::arg("points"), py::arg("alpha"), py::arg("k") = 10,
      py::arg("m") = 1);
  m.def(
      "bound_report",
      [](const maada::ModelParams& params, const maada::Dataset& source,
         const maada::Dataset& target, const std::optional<maada::Dataset>& target_oracle,
         const py::dict& config) {
        const maada::TrainConfig cfg = maada::config_from_json(py_to_json(config));
        const maada::BoundReport report =
            maada::bound_report(params, source, target, target_oracle, cfg);
        return json_to_py(maada::bound_report_to_json(report));
      },
      py::arg("params"), py::arg("source"), py::arg("target"),
      py::arg("target_oracle") = std::nullopt, py::arg("config") = py::dict());

  m.def("save_model", &maada::save_model, py::arg("params"), py::arg("bin_path"),
        py::arg("header_path"));
  m.def("load_model", &maada::load_model, py::arg("bin_path"), py::arg("header_path"));
  m.def("default_config", [] { return json_to_py(maada::config_to_json(maada::TrainConfig{})); });
}
