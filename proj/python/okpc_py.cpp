#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "okpc/assembly.hpp"
#include "okpc/commands.hpp"
#include "okpc/config.hpp"
#include "okpc/diagnostics.hpp"
#include "okpc/error.hpp"
#include "okpc/scheme.hpp"

namespace py = pybind11;
using namespace okpc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Vector& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return Vector(a.data(), a.data() + a.size());
}

Array dense_array(const DenseMatrix& m) {
  Array a({m.rows(), m.cols()});
  auto r = a.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return a;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict run_dict(const RunResult& r) {
  std::vector<double> energy{r.initial_energy}, mass{r.initial_mass}, times{0.0};
  std::vector<std::size_t> fp;
  std::vector<double> gmres_avg;
  for (const StepStats& s : r.steps) {
    energy.push_back(s.energy);
    mass.push_back(s.mass);
    times.push_back(s.t);
    fp.push_back(s.fp_iters);
    gmres_avg.push_back(s.gmres_avg());
  }
  py::dict d;
  d["u"] = to_array(r.u);
  d["w"] = to_array(r.w);
  d["t"] = to_array(times);
  d["energy"] = to_array(energy);
  d["mass"] = to_array(mass);
  d["fp_iters"] = fp;
  d["gmres_avg"] = to_array(gmres_avg);
  d["T_pc"] = r.total_fp_iters();
  d["IT"] = r.avg_gmres_iters();
  d["T_G"] = r.avg_fp_per_step();
  d["CPU1"] = r.cpu1();
  d["CPU2"] = r.cpu2();
  d["completed"] = r.completed;
  d["steady_state"] = r.steady_state;
  d["failure"] = r.failure;
  return d;
}

}  // namespace

PYBIND11_MODULE(_okpc, m) {
  m.doc() = "Preconditioned solvers for the Ohta-Kawasaki convex-splitting scheme";

  // base first: translators registered later are tried first
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  py::enum_<PrecondKind>(m, "PrecondKind")
      .value("NONE", PrecondKind::None)
      .value("BT", PrecondKind::BT)
      .value("EL", PrecondKind::EL)
      .value("MHSS", PrecondKind::MHSS);
  py::enum_<AlphaStrategy>(m, "AlphaStrategy")
      .value("TRACE_A", AlphaStrategy::TraceA)
      .value("TRACE_M4", AlphaStrategy::TraceM4)
      .value("FIXED", AlphaStrategy::Fixed);

  py::class_<Params>(m, "Params")
      .def(py::init<>())
      .def_readwrite("eps", &Params::eps)
      .def_readwrite("sigma", &Params::sigma)
      .def_readwrite("dt", &Params::dt)
      .def_readwrite("m", &Params::m)
      .def_readwrite("T", &Params::T)
      .def_readwrite("amplitude", &Params::amplitude)
      .def_readwrite("seed", &Params::seed)
      .def_readwrite("gmres_tol", &Params::gmres_tol)
      .def_readwrite("gmres_max", &Params::gmres_max)
      .def_readwrite("restart", &Params::restart)
      .def_readwrite("fp_tol", &Params::fp_tol)
      .def_readwrite("fp_max", &Params::fp_max)
      .def_readwrite("ss_tol", &Params::ss_tol)
      .def_property_readonly("zeta", &Params::zeta)
      .def("validate", &Params::validate);

  py::class_<PrecondConfig>(m, "PrecondConfig")
      .def(py::init<>())
      .def_readwrite("kind", &PrecondConfig::kind)
      .def_readwrite("alpha_strategy", &PrecondConfig::alpha_strategy)
      .def_readwrite("alpha_value", &PrecondConfig::alpha_value)
      .def_readwrite("safety", &PrecondConfig::safety)
      .def_readwrite("eps1", &PrecondConfig::eps1)
      .def_readwrite("eps1_adaptive", &PrecondConfig::eps1_adaptive)
      .def_readwrite("eps2", &PrecondConfig::eps2)
      .def_readwrite("max_depth", &PrecondConfig::max_depth);

  py::class_<Mesh>(m, "Mesh")
      .def(py::init(&build_mesh), py::arg("dim"), py::arg("n"))
      .def_readonly("dim", &Mesh::dim)
      .def_readonly("h", &Mesh::h)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_elements", &Mesh::num_elements)
      .def_property_readonly("coordinates", [](const Mesh& mesh) {
        Array a({static_cast<py::ssize_t>(mesh.num_vertices()), static_cast<py::ssize_t>(mesh.dim)});
        auto r = a.mutable_unchecked<2>();
        for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
          for (int k = 0; k < mesh.dim; ++k) r(i, k) = mesh.vertices[i][k];
        return a;
      });

  m.def("mass_matrix", [](const Mesh& mesh) { return dense_array(to_dense(assemble_mass(mesh))); },
        "Dense P1 mass matrix (small meshes).");
  m.def("stiffness_matrix", [](const Mesh& mesh) { return dense_array(to_dense(assemble_stiffness(mesh))); },
        "Dense P1 stiffness matrix (small meshes).");
  m.def(
      "weighted_mass_matrix",
      [](const Mesh& mesh, const Array& u) { return dense_array(to_dense(assemble_weighted_mass(mesh, to_vector(u)))); },
      py::arg("mesh"), py::arg("u"));

  m.def(
      "initial_condition",
      [](const Mesh& mesh, double mean, double amplitude, std::uint64_t seed) {
        return to_array(initial_condition(Discretization(mesh), mean, amplitude, seed));
      },
      py::arg("mesh"), py::arg("m"), py::arg("amplitude"), py::arg("seed"));

  m.def(
      "inverse_laplacian",
      [](const Mesh& mesh, const Array& v) {
        const Discretization disc(mesh);
        return to_array(inverse_laplacian_zero_mean(disc.stiffness, disc.mass, to_vector(v), 1e-10, {},
                                                    &disc.laplace_precond));
      },
      py::arg("mesh"), py::arg("v"), "Mean-zero phi with S phi = M v.");

  m.def(
      "energy",
      [](const Mesh& mesh, const Array& u, double eps, double sigma, double mean) {
        return discrete_energy(Discretization(mesh), to_vector(u), eps, sigma, mean);
      },
      py::arg("mesh"), py::arg("u"), py::arg("eps"), py::arg("sigma"), py::arg("m"));

  m.def(
      "run",
      [](const Mesh& mesh, const Params& params, const PrecondConfig& config, std::optional<Array> u0) {
        const Discretization disc(mesh);
        RunOptions opt;
        if (u0) opt.u0 = to_vector(*u0);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_simulation(disc, params, config, opt);
        }
        return run_dict(r);
      },
      py::arg("mesh"), py::arg("params"), py::arg("precond") = PrecondConfig{}, py::arg("u0") = py::none(),
      "Time integration; returns fields, energy/mass series and iteration metrics.");

  m.def(
      "certificates",
      [](const Mesh& mesh, const Array& u, const Params& params, const PrecondConfig& config) {
        const Discretization disc(mesh);
        const DenseInstance inst(disc, to_vector(u), params);
        return json_to_py(to_json(theorem_certificates(inst, config)));
      },
      py::arg("mesh"), py::arg("u"), py::arg("params"), py::arg("precond") = PrecondConfig{},
      "Dense spectral checks at state u, as a dict.");

  m.def(
      "spectrum",
      [](const Mesh& mesh, const Array& u, const Params& params, const PrecondConfig& config) {
        const Discretization disc(mesh);
        const DenseInstance inst(disc, to_vector(u), params);
        const SpectralReport r = preconditioned_spectrum(inst, config);
        py::array_t<std::complex<double>> ev(static_cast<py::ssize_t>(r.eigenvalues.size()));
        std::copy(r.eigenvalues.begin(), r.eigenvalues.end(), ev.mutable_data());
        return ev;
      },
      py::arg("mesh"), py::arg("u"), py::arg("params"), py::arg("precond") = PrecondConfig{});

  m.def(
      "condition_numbers",
      [](const std::vector<std::size_t>& mhats, const Params& params) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const ConditionRow& r : condition_sweep(mhats, params)) out.emplace_back(r.mhat, r.dof, r.kappa);
        return out;
      },
      py::arg("mhats"), py::arg("params"), "(mhat, dof, kappa) rows.");

  m.def("alpha_optimal", &alpha_optimal, py::arg("lambda_min"), py::arg("lambda_max"));
  m.def(
      "sigma_tilde", [](double alpha, const Array& ev) { return sigma_tilde(alpha, to_vector(ev)); },
      py::arg("alpha"), py::arg("eigenvalues"));

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_path, const std::vector<std::string>& overrides) {
        const RunConfig cfg = load_config(config_path, overrides);
        std::ostringstream log;
        int code = kExitOk;
        if (command == "run")
          code = cmd_run(cfg, log);
        else if (command == "spectrum")
          code = cmd_spectrum(cfg, log);
        else if (command == "bench")
          code = cmd_bench(cfg, log);
        else if (command == "cond-table")
          code = cmd_cond_table(cfg, log);
        else
          throw py::value_error("unknown command '" + command + "'");
        return py::make_tuple(code, log.str());
      },
      py::arg("command"), py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      "Same as the command-line tool; returns (exit_code, log).");
}
