#include "okpc/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "okpc/error.hpp"

namespace okpc {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

std::string csv_safe(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
  }
  return s;
}

std::string snapshot_name(std::size_t step) {
  std::ostringstream os;
  os << "snapshot_" << std::setw(6) << std::setfill('0') << step << ".csv";
  return os.str();
}

}  // namespace

nlohmann::json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"residual_history", r.residual_history},
          {"wall_time_s", r.wall_time_s}};
}

nlohmann::json run_stats_json(const RunResult& r) {
  nlohmann::json j;
  j["IT"] = r.avg_gmres_iters();
  j["T_pc"] = r.total_fp_iters();
  j["T_G"] = r.avg_fp_per_step();
  j["CPU1"] = r.cpu1();
  j["CPU2"] = r.cpu2();
  j["steps"] = r.steps.size();
  j["completed"] = r.completed;
  j["steady_state"] = r.steady_state;
  j["failure"] = r.failure;
  j["initial_energy"] = r.initial_energy;
  j["final_energy"] = r.steps.empty() ? r.initial_energy : r.steps.back().energy;
  std::size_t unconverged = 0;
  for (const auto& s : r.steps) unconverged += s.fp_converged ? 0 : 1;
  j["fp_unconverged_steps"] = unconverged;
  if (!r.steps.empty() && r.steps.back().last_solve.iterations > 0) {
    j["last_solve"] = to_json(r.steps.back().last_solve);
  }
  return j;
}

void write_snapshot_csv(const fs::path& path, const Mesh& mesh, const Snapshot& s) {
  auto out = open_out(path);
  out << (mesh.dim == 1 ? "x,u,w\n" : "x,y,u,w\n");
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    out << mesh.vertices[i][0] << ',';
    if (mesh.dim == 2) out << mesh.vertices[i][1] << ',';
    out << s.u[i] << ',' << s.w[i] << '\n';
  }
}

void write_energy_csv(const fs::path& path, const RunResult& r) {
  auto out = open_out(path);
  out << "step,t,energy,mass,fp_iters,gmres_avg\n";
  out << 0 << ',' << 0.0 << ',' << r.initial_energy << ',' << r.initial_mass << ',' << 0 << ',' << 0.0 << '\n';
  for (const auto& s : r.steps) {
    out << s.step << ',' << s.t << ',' << s.energy << ',' << s.mass << ',' << s.fp_iters << ',' << s.gmres_avg()
        << '\n';
  }
}

void write_eigenvalues_csv(const fs::path& path, const ComplexVector& ev) {
  auto out = open_out(path);
  out << "re,im\n";
  for (const auto& z : ev) out << z.real() << ',' << z.imag() << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

int cmd_run(const RunConfig& config, std::ostream& log) {
  const fs::path dir = prepare_dir(config.output_dir);
  const Discretization disc(build_mesh(config.dim, config.n));
  RunOptions opt;
  opt.snapshot_times = config.snapshot_times;
  const std::size_t total = config.params.steps();
  opt.on_step = [&log, total](const StepStats& s) {
    if (s.step % 50 == 0 || s.step == total) {
      log << "step " << s.step << "/" << total << "  E=" << std::setprecision(10) << s.energy
          << "  fp=" << s.fp_iters << "  it=" << std::setprecision(4) << s.gmres_avg() << '\n';
    }
  };
  log << "run: dim=" << config.dim << " n=" << config.n << " p=" << disc.p() << " steps=" << total
      << " precond=" << to_string(config.precond.kind) << '\n';
  const RunResult r = run_simulation(disc, config.params, config.precond, opt);

  write_energy_csv(dir / "energy.csv", r);
  for (const auto& s : r.snapshots) write_snapshot_csv(dir / snapshot_name(s.step), disc.mesh, s);
  write_json(dir / "stats.json", run_stats_json(r));
  log << "T_pc=" << r.total_fp_iters() << " IT=" << r.avg_gmres_iters() << " T_G=" << r.avg_fp_per_step()
      << " CPU1=" << r.cpu1() << " CPU2=" << r.cpu2() << '\n';
  if (!r.completed) {
    log << "solver failure: " << r.failure << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_spectrum(const RunConfig& config, std::ostream& log) {
  const fs::path dir = prepare_dir(config.output_dir);
  const Discretization disc(build_mesh(config.dim, config.n));
  const Vector u0 = initial_condition(disc, config.params.m, config.params.amplitude, config.params.seed);
  const DenseInstance inst(disc, u0, config.params);
  for (const auto& name : config.spectrum_operators) {
    PrecondConfig pc = config.precond;
    pc.kind = name == "A" ? PrecondKind::None : precond_kind_from_string(name);
    const SpectralReport rep = preconditioned_spectrum(inst, pc);
    write_eigenvalues_csv(dir / ("eig_" + name + ".csv"), rep.eigenvalues);
    log << rep.label << ": " << rep.eigenvalues.size() << " eigenvalues, real part in [" << rep.min_real << ", "
        << rep.max_real << "], max |Im| " << rep.max_abs_imag;
    if (rep.has_bound) log << ", bound [" << rep.lo << ", " << rep.hi << "], violations " << rep.violations;
    log << '\n';
  }
  const CertificateBundle bundle = theorem_certificates(inst, config.precond);
  write_json(dir / "certificates.json", to_json(bundle));
  log << "certificates: " << (bundle.all_pass() ? "all pass" : "FAILURES recorded") << '\n';
  return kExitOk;
}

int cmd_bench(const RunConfig& config, std::ostream& log) {
  const BenchConfig& b = config.bench;
  if (b.dofs.empty() || b.cases.empty() || b.kinds.empty()) {
    throw ConfigError("bench needs non-empty bench.dofs, bench.cases and bench.kinds");
  }
  if (b.steps == 0) throw ConfigError("bench.steps must be positive");
  const fs::path dir = prepare_dir(config.output_dir);
  auto out = open_out(dir / "bench.csv");
  out << "dof,eps,sigma,precond,T_pc,IT,cpu1_s,cpu2_s,status\n";
  bool any_failed = false;
  for (const auto dof : b.dofs) {
    const Discretization disc(build_mesh(config.dim, cells_for_dof(config.dim, dof)));
    for (const auto& [eps, sigma] : b.cases) {
      for (const auto kind : b.kinds) {
        Params prm = config.params;
        prm.eps = eps;
        prm.sigma = sigma;
        if (b.dt_eps_squared) prm.dt = eps * eps;
        prm.T = static_cast<double>(b.steps) * prm.dt;
        PrecondConfig pc = config.precond;
        pc.kind = kind;
        std::string status = "ok";
        RunResult r;
        try {
          prm.validate();
          r = run_simulation(disc, prm, pc);
          if (!r.completed) status = "failed: " + r.failure;
        } catch (const Error& e) {
          status = std::string("failed: ") + e.what();
        }
        if (status != "ok") any_failed = true;
        out << dof << ',' << eps << ',' << sigma << ',' << to_string(kind) << ',' << r.total_fp_iters() << ','
            << r.avg_gmres_iters() << ',' << r.cpu1() << ',' << r.cpu2() << ',' << csv_safe(status) << '\n';
        out.flush();
        log << "dof=" << dof << " eps=" << eps << " sigma=" << sigma << " " << to_string(kind)
            << " T_pc=" << r.total_fp_iters() << " IT=" << r.avg_gmres_iters() << " " << status << '\n';
      }
    }
  }
  return any_failed ? kExitSolver : kExitOk;
}

int cmd_cond_table(const RunConfig& config, std::ostream& log) {
  const fs::path dir = prepare_dir(config.output_dir);
  if (config.cond_mhat.empty()) throw ConfigError("cond.mhat must not be empty");
  const auto rows = condition_sweep(config.cond_mhat, config.params);
  auto out = open_out(dir / "cond_table.csv");
  out << "mhat,dof,kappa\n";
  for (const auto& r : rows) {
    out << r.mhat << ',' << r.dof << ',' << r.kappa << '\n';
    log << "mhat=" << r.mhat << " dof=" << r.dof << " kappa=" << std::setprecision(4) << std::scientific << r.kappa
        << std::defaultfloat << '\n';
  }
  return kExitOk;
}

}  // namespace okpc
