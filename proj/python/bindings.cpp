#include <sstream>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualstop/common.hpp"
#include "dualstop/experiment.hpp"
#include "dualstop/snell.hpp"

namespace py = pybind11;
using namespace dualstop;

namespace {

ExperimentConfig parse(const std::string& config_json, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return ExperimentConfig::from_json(j, base_dir);
}

py::array_t<double> to_array(const Table& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::object optional(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict row_dict(const TableRow& r) {
  py::dict d;
  d["randomizer"] = r.randomizer;
  d["family"] = r.family;
  d["n_paths"] = r.n_paths;
  d["n_test_paths"] = r.n_test_paths;
  d["status"] = to_string(r.status);
  d["iterations"] = r.iterations;
  d["alpha_hat"] = r.alpha_hat;
  d["lp_objective"] = r.lp_objective;
  d["m_hat"] = r.m_hat;
  d["se_hat"] = r.se_hat;
  d["sigma_hat"] = r.sigma_hat;
  d["m_hat_eta"] = r.m_hat_eta;
  d["sigma_hat_eta"] = r.sigma_hat_eta;
  d["m_test"] = optional(r.m_test);
  d["se_test"] = optional(r.se_test);
  d["sigma_test"] = optional(r.sigma_test);
  return d;
}

PathBundle simulate_config(const ExperimentConfig& c, std::size_t n_paths, std::uint64_t seed) {
  switch (c.model.kind) {
    case ModelKind::stylized:
      return simulate(StylizedModel{}, n_paths, seed);
    case ModelKind::bermudan:
      return simulate(c.model.bermudan, n_paths, seed);
    case ModelKind::tree:
      return tree_bundle(TreeModel::load(c.model.tree_file));
  }
  throw ConfigError("unknown model kind");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Randomized dual upper bounds for optimal stopping";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("preset", [](const std::string& name) { return preset_json(name).dump(); }, py::arg("name"));

  m.def(
      "value",
      [](const std::string& config, const std::string& base_dir) {
        const auto r = run_value(parse(config, base_dir));
        py::dict d;
        d["y0"] = r.y0;
        d["error"] = r.error;
        d["method"] = r.method;
        return d;
      },
      py::arg("config"), py::arg("base_dir") = ".");

  m.def(
      "minimize",
      [](const std::string& config, const std::string& base_dir) {
        const auto c = parse(config, base_dir);
        std::vector<TableRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_minimize(c);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"), py::arg("base_dir") = ".");

  m.def(
      "profile",
      [](const std::string& config, const std::string& base_dir) {
        const auto c = parse(config, base_dir);
        ProfileReport r;
        {
          py::gil_scoped_release release;
          r = run_profile(c);
        }
        py::dict curves;
        for (const auto& curve : r.curves) {
          py::list rows;
          for (const auto& p : curve.rows) {
            py::dict d;
            d["alpha"] = p.alpha;
            d["mean"] = p.mean;
            d["std"] = p.std;
            d["se"] = p.se;
            d["n"] = p.n;
            rows.append(d);
          }
          curves[py::str(curve.name)] = rows;
        }
        py::dict d;
        d["y0"] = r.y0;
        d["curves"] = curves;
        return d;
      },
      py::arg("config"), py::arg("base_dir") = ".");

  m.def(
      "verify",
      [](const std::string& config, const std::string& base_dir) {
        const auto c = parse(config, base_dir);
        py::gil_scoped_release release;
        return run_verify(c).json.dump();
      },
      py::arg("config"), py::arg("base_dir") = ".");

  m.def(
      "simulate",
      [](const std::string& config, std::size_t n_paths, std::uint64_t seed, const std::string& base_dir) {
        const auto paths = simulate_config(parse(config, base_dir), n_paths, seed);
        return py::make_tuple(to_array(paths.rewards), paths.weighted() ? py::cast(paths.weights) : py::none());
      },
      py::arg("config"), py::arg("n_paths"), py::arg("seed"), py::arg("base_dir") = ".");

  m.def(
      "bermudan_value",
      [](double s0, double sigma2, double kappa1, double kappa2) {
        const BermudanCallModel model{s0, sigma2, kappa1, kappa2};
        model.validate();
        return bermudan_value(model).value;
      },
      py::arg("s0"), py::arg("sigma2"), py::arg("kappa1"), py::arg("kappa2"));

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config, const std::string& base_dir) {
        std::ostringstream out, err;
        int code = 0;
        try {
          const auto c = parse(config, base_dir);
          py::gil_scoped_release release;
          code = run_command(command, c, out, err);
        } catch (const ConfigError& e) {
          err << "error: " << e.what() << '\n';
          code = 2;
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("base_dir") = ".");
}
