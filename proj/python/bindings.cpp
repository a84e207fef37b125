#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wsrm/errors.hpp"
#include "wsrm/harness.hpp"
#include "wsrm/solver.hpp"
#include "wsrm/spca.hpp"

namespace py = pybind11;
using namespace wsrm;

namespace {

// beams as complex array [M, N, Nt]
py::array_t<std::complex<double>> beams_array(const BeamformerSet& b) {
  py::array_t<std::complex<double>> out({b.cells(), b.subcarriers(), b.antennas()});
  auto v = out.mutable_unchecked<3>();
  for (int m = 0; m < b.cells(); ++m)
    for (int n = 0; n < b.subcarriers(); ++n)
      for (int a = 0; a < b.antennas(); ++a) v(m, n, a) = b.g(m, n)[a];
  return out;
}

py::dict trajectory_dict(const RunResult& r) {
  py::list iteration, wsr, surrogate, power, imag, gap, status;
  for (const IterationRecord& rec : r.trajectory) {
    iteration.append(rec.iteration);
    wsr.append(rec.wsr);
    surrogate.append(rec.surrogate);
    power.append(rec.bs_power);
    imag.append(rec.max_imag);
    gap.append(rec.estimator_gap);
    status.append(rec.solver_status);
  }
  py::dict d;
  d["iteration"] = iteration;
  d["wsr"] = wsr;
  d["surrogate"] = surrogate;
  d["bs_power"] = power;
  d["max_imag"] = imag;
  d["estimator_gap"] = gap;
  d["solver_status"] = status;
  return d;
}

}  // namespace

PYBIND11_MODULE(_wsrm, m) {
  m.doc() = "SPCA weighted sum-rate maximization core";
  m.attr("__version__") = WSRM_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SpcaError>(m, "SpcaError", PyExc_RuntimeError);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_static("desk", &NetworkConfig::desk)
      .def_static("paper_scale", &NetworkConfig::paper_scale)
      .def_readwrite("cells", &NetworkConfig::cells)
      .def_readwrite("users_per_cell", &NetworkConfig::users_per_cell)
      .def_readwrite("subcarriers", &NetworkConfig::subcarriers)
      .def_readwrite("antennas", &NetworkConfig::antennas)
      .def_readwrite("p_max", &NetworkConfig::p_max)
      .def_readwrite("inter_bs_distance", &NetworkConfig::inter_bs_distance)
      .def_readwrite("annulus_inner", &NetworkConfig::annulus_inner)
      .def_readwrite("annulus_outer", &NetworkConfig::annulus_outer)
      .def_readwrite("weights", &NetworkConfig::weights)
      .def("validate", &NetworkConfig::validate)
      .def("__repr__", [](const NetworkConfig& c) {
        return "NetworkConfig(" + to_json(c).dump() + ")";
      });

  py::class_<SpcaOptions>(m, "SpcaOptions")
      .def(py::init<>())
      .def_readwrite("epsilon", &SpcaOptions::epsilon)
      .def_readwrite("tol", &SpcaOptions::tol)
      .def_readwrite("max_iterations", &SpcaOptions::max_iterations)
      .def_readwrite("weight_margin", &SpcaOptions::weight_margin)
      .def_property(
          "method", [](const SpcaOptions& o) { return std::string(to_string(o.method)); },
          [](SpcaOptions& o, const std::string& s) { o.method = parse_method(s); })
      .def_property(
          "floor", [](const SpcaOptions& o) { return std::string(to_string(o.floor_mode)); },
          [](SpcaOptions& o, const std::string& s) { o.floor_mode = parse_floor_mode(s); })
      .def("validate", &SpcaOptions::validate);

  m.def("trial_seed", &trial_seed, py::arg("base_seed"), py::arg("trial"));
  m.def("upper_estimate", &upper_estimate, py::arg("zeta"), py::arg("v"), py::arg("theta"));

  m.def(
      "drop_and_run",
      [](const NetworkConfig& config, const SpcaOptions& options, std::uint64_t seed) {
        RunResult r;
        {
          py::gil_scoped_release release;
          const Scenario sc = drop_network(config, seed);
          const ChannelSet ch = generate_channels(sc, seed);
          r = run(sc, ch, options);
        }
        py::dict d;
        d["termination"] = to_string(r.termination);
        d["iterations"] = r.iterations();
        d["final_wsr"] = r.final_wsr();
        d["warnings"] = r.warnings;
        d["failure"] = r.failure;
        d["trajectory"] = trajectory_dict(r);
        d["beams"] = beams_array(r.beams);
        return d;
      },
      py::arg("config"), py::arg("options") = SpcaOptions{}, py::arg("seed") = 0,
      "Drop a network and draw channels from `seed`, then run SPCA.");

  py::class_<WaterFilling>(m, "WaterFilling")
      .def_readonly("power", &WaterFilling::power)
      .def_readonly("level", &WaterFilling::level)
      .def_readonly("rate", &WaterFilling::rate);
  m.def(
      "oracle_waterfilling",
      [](const std::vector<double>& gains, double p_max) { return oracle_waterfilling(gains, p_max); },
      py::arg("gains"), py::arg("p_max"));

  m.def(
      "solve_text",
      [](const std::string& text, int max_iterations) {
        std::istringstream in(text);
        const ConicProgram prog = read_text(in);
        SolverSettings st;
        if (max_iterations >= 0) st.max_iterations = max_iterations;
        Solution s;
        {
          py::gil_scoped_release release;
          s = solve(prog, st);
        }
        const ResidualReport rr = residuals(prog, s);
        py::dict d;
        d["status"] = to_string(s.status);
        d["iterations"] = s.iterations;
        d["primal_objective"] = s.primal_objective;
        d["dual_objective"] = s.dual_objective;
        d["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
        d["y"] = std::vector<double>(s.y.data(), s.y.data() + s.y.size());
        d["s"] = std::vector<double>(s.s.data(), s.s.data() + s.s.size());
        d["max_residual"] = rr.max_optimality_residual();
        return d;
      },
      py::arg("text"), py::arg("max_iterations") = -1, "Solve a conic program given in the text format.");

  m.def(
      "load_config", [](const std::filesystem::path& p) { return to_json(load_experiment_config(p)).dump(); },
      py::arg("path"), "Validated config as a JSON string.");

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config, const std::filesystem::path& out) {
        const ExperimentConfig c = load_experiment_config(config);
        RunArtifacts art;
        {
          py::gil_scoped_release release;
          art = c.sweep ? run_sweep(c, out, {false, false, "sweep"}) : run_experiment(c, out, {false, false, "run"});
        }
        return art.files;
      },
      py::arg("config"), py::arg("out"), "Run a config file; returns the written files relative to `out`.");
}
