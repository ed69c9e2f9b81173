// Python bindings: oslab._core.

#include "oslab/errors.hpp"
#include "oslab/experiment.hpp"
#include "oslab/grassmann.hpp"
#include "oslab/linalg.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/oseledets.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace oslab;
using json = nlohmann::json;

namespace {

struct PyPhase {
  Phase x;
};

json to_json(const py::handle& obj) {
  const py::object dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Matrix> bases(const std::vector<Subspace>& comps) {
  std::vector<Matrix> out;
  for (const auto& c : comps) out.push_back(c.basis());
  return out;
}

py::dict frequency(const Frequency& f) {
  py::dict d;
  d["hits"] = f.hits;
  d["total"] = f.total;
  d["value"] = f.value;
  d["lower"] = f.lower;
  d["upper"] = f.upper;
  return d;
}

Signature signature_of(int m, const std::vector<int>& dims) { return Signature(m, dims); }

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Finite-scale Oseledets, large-deviation and continuity experiments";
  mod.attr("__version__") = kVersion;

  static py::exception<Error> base_error(mod, "OslabError");
  static py::exception<ConfigError> config_error(mod, "ConfigError", base_error.ptr());
  static py::exception<HypothesisFailure> hypothesis_error(mod, "HypothesisFailure", base_error.ptr());
  static py::exception<NonTransversal> transversal_error(mod, "NonTransversal", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const HypothesisFailure& e) {
      py::set_error(hypothesis_error, e.what());
    } catch (const NonTransversal& e) {
      py::set_error(transversal_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  // Linear algebra ----------------------------------------------------------
  mod.def("singular_values", [](const Matrix& g) { return singular_values(g); }, py::arg("g"));
  mod.def("exterior_power", &exterior_power, py::arg("g"), py::arg("k"));
  mod.def("gap_ratio", &gap_ratio, py::arg("g"), py::arg("k"));
  mod.def("rift", &rift, py::arg("g0"), py::arg("g1"));
  mod.def(
      "most_expanding", [](const Matrix& g, int k) { return most_expanding(g, k).basis(); }, py::arg("g"),
      py::arg("k"), "Orthonormal basis of the most expanding k-plane.");
  mod.def(
      "subspace_distance",
      [](const Matrix& e, const Matrix& f) { return subspace_distance(Subspace::span_of(e), Subspace::span_of(f)); },
      py::arg("e"), py::arg("f"), "Distance between the column spans of e and f.");

  mod.def(
      "ap_check",
      [](const std::vector<Matrix>& chain, double kappa_ap, double eps_ap) {
        const ApReport r = ap_check(chain, kappa_ap, eps_ap);
        py::dict d;
        d["distance_forward"] = r.distance_forward;
        d["distance_adjoint"] = r.distance_adjoint;
        d["bound"] = r.bound;
        d["measured_constant"] = r.measured_constant;
        d["gaps"] = r.gaps;
        d["rifts"] = r.rifts;
        d["holds"] = r.holds;
        return d;
      },
      py::arg("chain"), py::arg("kappa_ap"), py::arg("eps_ap"));

  // Dynamics and cocycles ---------------------------------------------------
  py::class_<PyPhase>(mod, "Phase");

  py::class_<BaseSystem>(mod, "BaseSystem")
      .def_static("rotation", &BaseSystem::rotation, py::arg("alpha"))
      .def_static("golden", &BaseSystem::golden_rotation)
      .def_static("bernoulli", &BaseSystem::bernoulli, py::arg("weights"))
      .def_static("markov", &BaseSystem::markov, py::arg("transition"), py::arg("window") = std::size_t{1} << 20)
      .def_static(
          "from_config", [](const py::dict& d) { return build_base(to_json(d)); }, py::arg("descriptor"))
      .def_property_readonly("kind", &BaseSystem::kind_name)
      .def(
          "sample_phases",
          [](const BaseSystem& s, std::size_t count, std::uint64_t seed) {
            std::vector<PyPhase> out;
            for (auto& x : s.sample_phases(count, seed)) out.push_back({x});
            return out;
          },
          py::arg("count"), py::arg("seed"))
      .def(
          "step", [](const BaseSystem& s, const PyPhase& x, std::int64_t n) { return PyPhase{s.step(x.x, n)}; },
          py::arg("x"), py::arg("n") = 1)
      .def(
          "coordinates", [](const BaseSystem& s, const PyPhase& x) { return s.coordinates(x.x); }, py::arg("x"))
      .def(
          "symbol", [](const BaseSystem& s, const PyPhase& x, std::int64_t j) { return s.symbol(x.x, j); },
          py::arg("x"), py::arg("j") = 0);

  py::class_<Cocycle>(mod, "Cocycle")
      .def_static(
          "catalog", [](const std::string& name, const py::dict& params) { return catalog(name, to_json(params)); },
          py::arg("name"), py::arg("params") = py::dict())
      .def_static("constant", [](const Matrix& g) { return constant_cocycle(g); }, py::arg("matrix"))
      .def_static("schrodinger", &schrodinger_cocycle, py::arg("energy"), py::arg("coupling"))
      .def_property_readonly("dim", &Cocycle::dim)
      .def_property_readonly("label", &Cocycle::label)
      .def(
          "__call__", [](const Cocycle& a, const BaseSystem& s, const PyPhase& x) { return a(s, x.x); },
          py::arg("base"), py::arg("x"))
      .def(
          "iterate",
          [](const Cocycle& a, const BaseSystem& s, const PyPhase& x, std::int64_t n) {
            Matrix p = Matrix::Identity(a.dim(), a.dim());
            Phase y = x.x;
            for (std::int64_t j = 0; j < n; ++j) {
              p = a(s, y) * p;
              y = s.step(y, 1);
            }
            return p;
          },
          py::arg("base"), py::arg("x"), py::arg("n"), "A^(n)(x) as a plain product (small n only).");
  mod.def("catalog_names", &catalog_names);

  // Lyapunov spectrum -------------------------------------------------------
  mod.def(
      "estimate_spectrum",
      [](const Cocycle& a, const BaseSystem& s, std::int64_t n, std::size_t samples, std::uint64_t seed,
         int threads) {
        SpectrumEstimate est;
        {
          py::gil_scoped_release release;
          est = estimate_spectrum(a, s, n, samples, seed, threads);
        }
        const GapPattern gp = detect_gap_pattern(est);
        py::dict d;
        d["n"] = est.n;
        d["values"] = est.values;
        d["std_errors"] = est.std_errors;
        d["tau"] = gp.tau.dims();
        d["gap"] = gp.gap;
        return d;
      },
      py::arg("cocycle"), py::arg("base"), py::arg("n"), py::arg("samples"), py::arg("seed") = 0,
      py::arg("threads") = 1);

  // Oseledets data ----------------------------------------------------------
  mod.def(
      "finite_direction",
      [](const Cocycle& a, const BaseSystem& s, const PyPhase& x, std::int64_t n, const std::vector<int>& tau) {
        const PartialDirection p = finite_direction(a, s, x.x, n, signature_of(a.dim(), tau));
        py::dict d;
        d["defined"] = p.defined;
        d["log_gap"] = p.log_gap;
        d["components"] = p.defined ? py::cast(bases(p.value.components())) : py::none();
        return d;
      },
      py::arg("cocycle"), py::arg("base"), py::arg("x"), py::arg("n"), py::arg("tau"));
  mod.def(
      "oseledets_decomposition",
      [](const Cocycle& a, const BaseSystem& s, const PyPhase& x, std::int64_t n, const std::vector<int>& tau) {
        const PartialDecomposition p = oseledets_decomposition(a, s, x.x, n, signature_of(a.dim(), tau));
        py::dict d;
        d["defined"] = p.defined;
        d["theta"] = p.theta;
        d["components"] = p.defined ? py::cast(bases(p.value.components())) : py::none();
        return d;
      },
      py::arg("cocycle"), py::arg("base"), py::arg("x"), py::arg("n"), py::arg("tau"));
  mod.def(
      "convergence_rate",
      [](const Cocycle& a, const BaseSystem& s, const PyPhase& x, const std::vector<int>& tau,
         const std::vector<std::int64_t>& scales) {
        const ConvergenceReport r = convergence_rate(a, s, x.x, signature_of(a.dim(), tau), scales);
        py::dict d;
        d["defined"] = r.defined;
        d["scales"] = r.scales;
        d["log_distances"] = r.log_distances;
        d["slopes"] = r.slopes;
        return d;
      },
      py::arg("cocycle"), py::arg("base"), py::arg("x"), py::arg("tau"), py::arg("scales"));

  // Large deviations --------------------------------------------------------
  mod.def(
      "fiber_deviation_measure",
      [](const Cocycle& a, const BaseSystem& s, std::int64_t n, double eps, std::size_t samples,
         std::uint64_t seed, int threads) {
        FiberDeviation f;
        {
          py::gil_scoped_release release;
          f = fiber_deviation_measure(a, s, n, eps, samples, seed, threads);
        }
        py::dict d = frequency(f.measure);
        d["reference"] = f.reference;
        return d;
      },
      py::arg("cocycle"), py::arg("base"), py::arg("n"), py::arg("eps"), py::arg("samples"), py::arg("seed") = 0,
      py::arg("threads") = 1);

  // Experiment runner -------------------------------------------------------
  mod.def(
      "validate_config",
      [](const py::dict& doc) {
        ExperimentConfig cfg = parse_config(to_json(doc));
        validate_config(cfg);
        return cfg.warnings;
      },
      py::arg("config"), "Schema and cross-field checks. Returns warnings; raises ConfigError.");
  mod.def(
      "run_config",
      [](const py::dict& doc, std::optional<std::string> out_dir, std::optional<std::uint64_t> seed, int threads,
         std::optional<std::string> format) {
        const ExperimentConfig cfg = parse_config(to_json(doc));
        RunOptions ro;
        ro.out_dir = std::move(out_dir);
        ro.seed = seed;
        ro.threads = threads;
        if (format) {
          if (*format == "csv") {
            ro.format = OutputFormat::csv;
          } else if (*format == "json") {
            ro.format = OutputFormat::json;
          } else {
            throw ConfigError("output.format", "expected 'csv' or 'json'");
          }
        }
        std::ostringstream log;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_experiment(cfg, ro, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(), py::arg("threads") = 0,
      py::arg("format") = py::none(), "Runs the pipelines; returns (exit_code, log).");
  mod.def("load_config_file", [](const std::string& path) { return from_json(load_config_file(path)); },
          py::arg("path"));
  mod.def("describe", &describe, py::arg("name"));
}
