// Python bindings for the core operations.
#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "schrolab/harness.hpp"
#include "schrolab/operator_model.hpp"
#include "schrolab/point_process.hpp"
#include "schrolab/randomness.hpp"
#include "schrolab/sde.hpp"

namespace py = pybind11;
using namespace schrolab;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Channel parse_channel(const std::string& s) {
  if (s == "B") return Channel::B;
  if (s == "B1") return Channel::B1;
  if (s == "B2") return Channel::B2;
  if (s == "B3") return Channel::B3;
  throw std::invalid_argument("unknown channel '" + s + "'");
}

ChannelSet parse_channels(const std::vector<std::string>& names) {
  ChannelSet s;
  for (const auto& n : names) s = s.with(parse_channel(n));
  return s;
}

Hamiltonian from_diagonal(std::vector<double> d) { return Hamiltonian{std::move(d)}; }

ExperimentConfig config_from(const py::dict& kv) {
  std::string text;
  for (const auto& [k, v] : kv) {
    text += py::str(k).cast<std::string>() + " = " + py::str(v).cast<std::string>() + "\n";
  }
  return ExperimentConfig::parse(text);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Critical random Schroedinger operators: simulation and verification";
  m.attr("__version__") = std::string(kCodeVersion);

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SeedSpec>(m, "SeedSpec")
      .def(py::init([](std::uint64_t master, std::uint64_t stream) {
             return SeedSpec{master, stream};
           }),
           py::arg("master_seed"), py::arg("stream_id"))
      .def_readwrite("master_seed", &SeedSpec::master_seed)
      .def_readwrite("stream_id", &SeedSpec::stream_id)
      .def("__eq__", [](const SeedSpec& a, const SeedSpec& b) { return a == b; })
      .def("__repr__", [](const SeedSpec& s) {
        return "SeedSpec(" + std::to_string(s.master_seed) + ", " + std::to_string(s.stream_id) + ")";
      });

  m.def("sample_omega",
        [](const std::string& kind, SeedSpec seed, std::size_t count) {
          return sample_omega(parse_omega_kind(kind), seed, count);
        },
        py::arg("kind"), py::arg("seed"), py::arg("count"));

  // Discrete operator.
  m.def("density_rho", &density_rho, py::arg("E"));
  m.def("potential_diagonal",
        [](const std::string& model, double sigma, const std::string& omega, std::size_t n,
           SeedSpec seed) {
          PotentialSpec spec{parse_potential_model(model), sigma, parse_omega_kind(omega), n};
          return build_hamiltonian(spec, seed).diagonal;
        },
        py::arg("model"), py::arg("sigma"), py::arg("omega"), py::arg("n"), py::arg("seed"),
        "Diagonal of the Hamiltonian; the off-diagonal is 1.");
  m.def("sturm_count",
        [](std::vector<double> d, double mu) { return sturm_count(from_diagonal(std::move(d)), mu); },
        py::arg("diagonal"), py::arg("mu"));
  m.def("eigenvalues_in_interval",
        [](std::vector<double> d, double a, double b, double tol) {
          return eigenvalues_in_interval(from_diagonal(std::move(d)), a, b, tol);
        },
        py::arg("diagonal"), py::arg("a"), py::arg("b"), py::arg("tol") = 1e-12);
  m.def("eigenvector",
        [](std::vector<double> d, double mu) { return eigenvector(from_diagonal(std::move(d)), mu); },
        py::arg("diagonal"), py::arg("mu"));
  m.def("rescaled_eigenvalues",
        [](std::vector<double> d, double E, double R, const std::string& shift) {
          const SpectralWindow w(E, R);
          const auto eigs = eigenvalues_in_window(from_diagonal(d), w, 1e-12);
          return rescale_and_shift(eigs, w, d.size(), parse_shift_convention(shift)).points;
        },
        py::arg("diagonal"), py::arg("E"), py::arg("R"), py::arg("shift") = "lattice",
        "Shifted rescaled eigenvalues in the window of half-width R.");

  // Noise tapes.
  py::class_<NoiseTape>(m, "NoiseTape")
      .def_static("make",
                  [](SeedSpec seed, double dt, std::size_t steps, const std::vector<std::string>& ch) {
                    return NoiseTape::make(seed, dt, steps, parse_channels(ch));
                  },
                  py::arg("seed"), py::arg("dt"), py::arg("steps"),
                  py::arg("channels") = std::vector<std::string>{"B", "B2", "B3"})
      .def_static("zero",
                  [](double dt, std::size_t steps, const std::vector<std::string>& ch) {
                    return NoiseTape::zero(dt, steps, parse_channels(ch));
                  },
                  py::arg("dt"), py::arg("steps"),
                  py::arg("channels") = std::vector<std::string>{"B", "B2", "B3"})
      .def_property_readonly("dt", &NoiseTape::dt)
      .def_property_readonly("steps", &NoiseTape::steps)
      .def_property_readonly("duration", &NoiseTape::duration)
      .def("channel",
           [](const NoiseTape& t, const std::string& c) {
             const auto s = t.channel(parse_channel(c));
             return std::vector<double>(s.begin(), s.end());
           })
      .def("refined", &NoiseTape::refined)
      .def("coarsened", &NoiseTape::coarsened);

  // Continuum SDEs.
  m.def("integrate_phase_family",
        [](const std::string& kind, std::vector<double> grid, double horizon, const NoiseTape& tape,
           std::size_t record_every) {
          PhaseOptions o;
          o.record_every = record_every;
          const auto p = integrate_phase_family(parse_phase_kind(kind), grid, horizon, tape, o);
          return py::make_tuple(p.times, p.values);
        },
        py::arg("kind"), py::arg("grid"), py::arg("horizon"), py::arg("tape"),
        py::arg("record_every") = 0, "Returns (times, values[k][j]).");
  m.def("integrate_relative_family",
        [](const std::string& kind, std::vector<double> grid, double horizon, const NoiseTape& tape,
           double beta, std::size_t record_every) {
          RelativeOptions o;
          o.beta = beta;
          o.record_every = record_every;
          const auto p = integrate_relative_family(parse_relative_kind(kind), grid, horizon, tape, o);
          return py::make_tuple(p.times, p.values);
        },
        py::arg("kind"), py::arg("grid"), py::arg("horizon"), py::arg("tape"), py::arg("beta") = 2.0,
        py::arg("record_every") = 0);
  m.def("sine_beta_tmax", &sine_beta_tmax, py::arg("beta"), py::arg("lambda_max"));

  // Point processes.
  m.def("sch_phases",
        [](double tau, std::vector<double> lambdas, const NoiseTape& t) {
          return sch_phases(tau, lambdas, t);
        },
        py::arg("tau"), py::arg("lambdas"), py::arg("tape"));
  m.def("sample_sch_points",
        [](double tau, double lo, double hi, const NoiseTape& t) {
          return sample_sch_points(tau, lo, hi, t).points;
        },
        py::arg("tau"), py::arg("lo"), py::arg("hi"), py::arg("tape"));
  m.def("count_sine_beta",
        [](double beta, std::vector<double> grid, const NoiseTape& t, double tmax) {
          const auto r = count_sine_beta(beta, grid, t, tmax);
          return py::make_tuple(r.counts, r.max_residual, r.insufficient_tmax);
        },
        py::arg("beta"), py::arg("grid"), py::arg("tape"), py::arg("tmax"),
        "Returns (counts, max_residual, insufficient_tmax).");
  m.def("carousel_count",
        [](double tau, double L, double U, const NoiseTape& t) { return carousel_count(tau, L, U, t); },
        py::arg("tau"), py::arg("L"), py::arg("U"), py::arg("tape"));
  m.def("sch_star_count",
        [](double tau, double L, double U, const NoiseTape& t) { return sch_star_count(tau, L, U, t); },
        py::arg("tau"), py::arg("L"), py::arg("U"), py::arg("tape"));
  m.def("theta_density", &theta_density, py::arg("x"), py::arg("tau"));
  m.def("theta_mass", &theta_mass, py::arg("a"), py::arg("b"), py::arg("tau"));
  m.def("compare_distributions",
        [](std::vector<long> a, std::vector<long> b) { return to_py(compare_distributions(a, b).to_json()); },
        py::arg("a"), py::arg("b"));

  // Harness.
  m.def("experiment_names", &experiment_names);
  m.def("config_defaults",
        [](const std::string& name) {
          const auto c = ExperimentConfig::defaults(name);
          py::dict d;
          for (const auto& k : ExperimentConfig::keys()) d[py::str(k)] = c.get(k);
          return d;
        },
        py::arg("experiment"));
  m.def("config_hash", [](const py::dict& kv) { return config_from(kv).hash(); }, py::arg("config"));
  m.def("run_experiment",
        [](const py::dict& kv) {
          const auto c = config_from(kv);
          ExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(c);
          }
          py::list reports;
          for (const auto& rep : r.reports) reports.append(to_py(rep.to_json()));
          py::dict out;
          out["manifest"] = to_py(r.manifest.to_json());
          out["reports"] = reports;
          out["data"] = r.data;
          return out;
        },
        py::arg("config"),
        "Runs an experiment from a dict of config keys; returns manifest, reports and data.");
  m.def("replay",
        [](const std::string& run_dir, const std::string& task, const py::dict& overrides) {
          const auto man = RunManifest::load(run_dir);
          auto c = ExperimentConfig::defaults(man.experiment);
          for (const auto& [k, v] : man.config) c.set(k, v);
          for (const auto& [k, v] : overrides) {
            c.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
          }
          const auto r = replay(man, c, TaskId::parse(task));
          py::dict out;
          out["task"] = r.task.str();
          out["seed"] = r.seed;
          out["output"] = r.output;
          out["config_matches"] = r.config_matches;
          return out;
        },
        py::arg("run_dir"), py::arg("task"), py::arg("overrides") = py::dict());
}
