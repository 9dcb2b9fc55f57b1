// Python module _hac_lab: geometry kernels, loss breakdowns and the
// pretrain / unlearn / evaluate pipeline driven by a JSON run config.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hac/cli/commands.hpp"
#include "hac/cli/config.hpp"
#include "hac/errors.hpp"
#include "hac/eval/report_io.hpp"
#include "hac/geometry/lorentz.hpp"
#include "hac/objectives/losses.hpp"
#include "hac/train/checkpoint.hpp"

namespace py = pybind11;
using namespace hac;

namespace {

using Rows = std::vector<std::vector<double>>;

ad::Tensor to_tensor(const Rows& rows) {
  if (rows.empty() || rows.front().empty()) throw ValidationError("expected a non-empty list of rows");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw ShapeError("rows have different lengths");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ad::Tensor::matrix(rows.size(), rows.front().size(), std::move(flat));
}

geometry::LorentzPoint point(std::vector<double> space, double curvature) {
  return geometry::LorentzPoint::from_space(std::move(space), curvature);
}

objectives::UnlearnHyperParams hyper_params(const py::dict& d) {
  objectives::UnlearnHyperParams hp;
  for (auto [key, value] : d) {
    const auto k = key.cast<std::string>();
    const auto v = value.cast<double>();
    if (k == "alpha") hp.alpha = v;
    else if (k == "beta") hp.beta = v;
    else if (k == "gamma") hp.gamma = v;
    else if (k == "epsilon") hp.epsilon = v;
    else if (k == "omega_r") hp.omega_r = v;
    else if (k == "omega_f") hp.omega_f = v;
    else if (k == "lambda_reg") hp.lambda_reg = v;
    else if (k == "tau") hp.tau = v;
    else throw ValidationError("unknown hyperparameter '" + k + "'");
  }
  return hp;
}

py::dict loss_breakdown(const Rows& image, const Rows& text, const std::vector<bool>& forget,
                        const std::string& mode, const std::string& kind, const py::dict& hp, double curvature,
                        double aperture_k) {
  ad::Graph g;
  objectives::EmbeddingBatch batch;
  batch.image = g.constant(to_tensor(image));
  batch.text = g.constant(to_tensor(text));
  batch.forget_mask = forget;
  batch.kind = objectives::similarity_kind_from_string(kind);
  batch.geometry.curvature = curvature;
  batch.geometry.aperture_k = aperture_k;
  const auto terms =
      objectives::unlearning_objective(batch, hyper_params(hp), objectives::unlearn_mode_from_string(mode));
  py::dict out;
  auto put = [&](const char* name, const ad::Var& v) {
    if (v.valid()) out[name] = v.item();
  };
  put("retain", terms.retain);
  put("negative", terms.negative);
  put("positive", terms.positive);
  put("performance", terms.performance);
  put("retain_entailment", terms.retain_entailment);
  put("forget_entailment", terms.forget_entailment);
  put("norm_reg", terms.norm_reg);
  put("total", terms.total);
  return out;
}

struct Config {
  cli::RunConfig run;

  static Config from_file(const std::filesystem::path& path) { return {cli::load_config(path)}; }
  static Config from_json(const std::string& text, const std::filesystem::path& base_dir) {
    return {cli::parse_config(nlohmann::json::parse(text), base_dir)};
  }
  std::string to_json() const { return cli::config_json(run).dump(2); }
};

struct Pipeline {
  cli::RunConfig config;
  cli::RunData data;

  explicit Pipeline(const Config& c) : config(c.run), data(cli::prepare_data(c.run)) {}
};

std::vector<py::dict> pretrain_log(const std::vector<train::PretrainLogRow>& log) {
  std::vector<py::dict> out;
  for (const auto& r : log) {
    py::dict row;
    row["iteration"] = r.iteration;
    row["lr"] = r.lr;
    row["loss"] = r.loss;
    row["grad_norm"] = r.grad_norm;
    out.push_back(row);
  }
  return out;
}

std::vector<py::dict> unlearn_log(const std::vector<train::UnlearnLogRow>& log) {
  std::vector<py::dict> out;
  for (const auto& r : log) {
    py::dict row;
    row["iteration"] = r.iteration;
    row["lr"] = r.lr;
    row["retain"] = r.retain;
    row["negative"] = r.negative;
    row["positive"] = r.positive;
    row["performance"] = r.performance;
    row["retain_entailment"] = r.retain_entailment;
    row["forget_entailment"] = r.forget_entailment;
    row["norm_reg"] = r.norm_reg;
    row["total"] = r.total;
    row["grad_norm"] = r.grad_norm;
    out.push_back(row);
  }
  return out;
}

py::object json_to_python(const nlohmann::ordered_json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_hac_lab, m) {
  m.doc() = "Concept removal by alignment calibration in Euclidean and hyperbolic dual encoders";

  static py::exception<Error> base(m, "HacError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<ShapeError> shape(m, "ShapeError", base.ptr());
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  static py::exception<IoError> io(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const ShapeError& e) {
      py::set_error(shape, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const IoError& e) {
      py::set_error(io, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def(
      "exp_map_origin",
      [](const std::vector<double>& tangent, double c) {
        const auto p = geometry::exp_map_origin(tangent, c);
        return py::make_tuple(p.space, p.time);
      },
      py::arg("tangent"), py::arg("curvature") = 1.0, "Lift a tangent vector at the origin: (space, time).");
  m.def(
      "lorentz_inner",
      [](std::vector<double> x, std::vector<double> y, double c) {
        return geometry::lorentz_inner(point(std::move(x), c), point(std::move(y), c));
      },
      py::arg("x"), py::arg("y"), py::arg("curvature") = 1.0);
  m.def(
      "lorentz_distance",
      [](std::vector<double> x, std::vector<double> y, double c) {
        return geometry::lorentz_distance(point(std::move(x), c), point(std::move(y), c));
      },
      py::arg("x"), py::arg("y"), py::arg("curvature") = 1.0, "Geodesic distance between space components.");
  m.def(
      "distance_to_origin",
      [](std::vector<double> x, double c) { return geometry::distance_to_origin(point(std::move(x), c)); },
      py::arg("x"), py::arg("curvature") = 1.0);
  m.def(
      "exterior_angle",
      [](std::vector<double> x, std::vector<double> t, double c) {
        return geometry::exterior_angle(point(std::move(x), c), point(std::move(t), c));
      },
      py::arg("x"), py::arg("t"), py::arg("curvature") = 1.0);
  m.def(
      "half_aperture",
      [](std::vector<double> t, double c, double k) {
        geometry::GeometryConfig cfg;
        cfg.curvature = c;
        cfg.aperture_k = k;
        return geometry::half_aperture(point(std::move(t), c), cfg);
      },
      py::arg("t"), py::arg("curvature") = 1.0, py::arg("aperture_k") = 0.1);

  m.def("loss_breakdown", &loss_breakdown, py::arg("image"), py::arg("text"), py::arg("forget"),
        py::arg("mode") = "ac", py::arg("kind") = "euclidean-cosine", py::arg("hp") = py::dict(),
        py::arg("curvature") = 1.0, py::arg("aperture_k") = 0.1,
        "Every term of an unlearning objective on one batch of embeddings.");

  py::class_<Config>(m, "Config")
      .def_static("from_file", &Config::from_file, py::arg("path"))
      .def_static("from_json", &Config::from_json, py::arg("text"), py::arg("base_dir") = std::filesystem::path{})
      .def("to_json", &Config::to_json)
      .def_property(
          "seed", [](const Config& c) { return c.run.seed; }, [](Config& c, std::uint64_t s) { c.run.seed = s; })
      .def_property_readonly("mode", [](const Config& c) { return std::string(cli::to_string(c.run.mode)); });

  py::class_<train::ModelParams>(m, "Model")
      .def("to_bytes", [](const train::ModelParams& p) { return py::bytes(train::checkpoint_bytes(p)); })
      .def_static("from_bytes", [](const py::bytes& b) { return train::parse_checkpoint(std::string(b)); })
      .def_property_readonly("input_dim", &train::ModelParams::input_dim)
      .def_property_readonly("embed_dim", &train::ModelParams::embed_dim)
      .def("embed_images", [](const train::ModelParams& p, const Rows& f) {
        const auto t = train::embed_images(p, to_tensor(f));
        return std::vector<double>(t.values().begin(), t.values().end());
      })
      .def("__eq__", [](const train::ModelParams& a, const train::ModelParams& b) { return a == b; });

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init<const Config&>(), py::arg("config"))
      .def("initial_model", [](const Pipeline& p) { return cli::initial_model(p.config, p.data); })
      .def("pretrain",
           [](const Pipeline& p) {
             auto r = cli::run_pretrain(p.config, p.data);
             return py::make_tuple(r.model, pretrain_log(r.log));
           })
      .def(
          "unlearn",
          [](const Pipeline& p, const train::ModelParams& original) {
            cli::check_compatible(p.config, p.data, original);
            auto r = cli::run_unlearn(p.config, p.data, original);
            return py::make_tuple(r.model, unlearn_log(r.log));
          },
          py::arg("original"))
      .def(
          "evaluate",
          [](const Pipeline& p, const train::ModelParams& model) {
            return json_to_python(eval::report_json(cli::run_eval(p.config, p.data, model), p.config.probe_enabled));
          },
          py::arg("model"))
      .def(
          "audit",
          [](const Pipeline& p, const train::ModelParams& original, const train::ModelParams& unlearned) {
            return json_to_python(eval::audit_json(cli::run_audit(p.data, original, unlearned)));
          },
          py::arg("original"), py::arg("unlearned"));

  m.def(
      "gradient_suite",
      [](const Config& c, std::size_t points, bool inject_fault) {
        std::vector<py::tuple> out;
        for (const auto& r : cli::gradient_suite(c.run, points, inject_fault)) {
          out.push_back(py::make_tuple(r.name, r.max_relative_error, r.passed));
        }
        return out;
      },
      py::arg("config"), py::arg("points") = 20, py::arg("inject_fault") = false,
      "(name, max relative error, passed) per loss.");

  m.def(
      "run_command",
      [](const std::string& verb, std::optional<std::filesystem::path> config,
         std::optional<std::filesystem::path> checkpoint, std::optional<std::uint64_t> seed,
         const std::filesystem::path& out, const std::string& axis, const std::string& values, std::size_t points,
         bool inject_fault) {
        cli::CommandLine cmd;
        cmd.verb = verb;
        cmd.config = std::move(config);
        cmd.checkpoint = std::move(checkpoint);
        cmd.seed = seed;
        cmd.out = out;
        cmd.axis = axis;
        cmd.values = values;
        cmd.grad_points = points;
        cmd.inject_fault = inject_fault;
        std::ostringstream so, se;
        const int code = cli::run_command(cmd, so, se);
        return py::make_tuple(code, so.str(), se.str());
      },
      py::arg("verb"), py::arg("config") = py::none(), py::arg("checkpoint") = py::none(),
      py::arg("seed") = py::none(), py::arg("out") = std::filesystem::path("runs"), py::arg("axis") = "",
      py::arg("values") = "", py::arg("points") = 20, py::arg("inject_fault") = false,
      "Runs one hac_lab verb: (exit code, stdout, stderr).");
}
