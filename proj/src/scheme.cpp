#include "okpc/scheme.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "okpc/assembly.hpp"
#include "okpc/block_operator.hpp"
#include "okpc/error.hpp"
#include "okpc/krylov.hpp"
#include "okpc/random.hpp"

namespace okpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Discretization::Discretization(Mesh m) : mesh(std::move(m)) {
  mesh.validate();
  mass = assemble_mass(mesh);
  stiffness = assemble_stiffness(mesh);
  mass_times_one = mass.multiply(Vector(mass.rows(), 1.0));
  measure = 0.0;
  for (double v : mass_times_one) measure += v;
  laplace_precond = SpdInverse::from_matrix(combine(1.0, stiffness, 1.0, mass), "S + M");
}

Vector initial_condition(const Discretization& disc, double m, double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0) throw Error("initial_condition: amplitude must be nonnegative");
  Rng rng(seed);
  Vector u(disc.p());
  for (double& v : u) v = m + amplitude * rng.symmetric();
  const double shift = discrete_mean(disc, u) - m;
  for (double& v : u) v -= shift;
  return u;
}

double discrete_mean(const Discretization& disc, std::span<const double> u) {
  return dot(disc.mass_times_one, u) / disc.measure;
}

double mass_norm(const SparseMatrix& mass, std::span<const double> x) {
  return std::sqrt(std::max(0.0, dot(x, mass.multiply(x))));
}

Vector inverse_laplacian_zero_mean(const SparseMatrix& stiffness, const SparseMatrix& mass, std::span<const double> v,
                                   double tol, std::span<const double> warm_start, const SpdInverse* precond) {
  const std::size_t p = mass.rows();
  if (v.size() != p) throw DimensionMismatch("inverse_laplacian_zero_mean: vector length");
  const Vector m1 = mass.multiply(Vector(p, 1.0));
  double measure = 0.0;
  for (double x : m1) measure += x;
  const double mean = dot(m1, v) / measure;
  if (std::abs(mean) > 1e-10) {
    throw Error("inverse_laplacian_zero_mean: input mean " + sci(mean) + " is not zero");
  }
  Vector b = mass.multiply(v);
  // make b exactly orthogonal to the kernel of S
  double bsum = 0.0;
  for (double x : b) bsum += x;
  for (double& x : b) x -= bsum / static_cast<double>(p);

  CgOptions opt;
  opt.tol = tol;
  opt.label = "S on mean-zero fields";
  SpdInverse local;
  if (precond == nullptr || !*precond) {
    local = SpdInverse::from_matrix(combine(1.0, stiffness, 1.0, mass), "S + M");
    precond = &local;
  }
  opt.preconditioner = precond->as_operator();
  opt.projector = [p](std::span<double> z) {
    double s = 0.0;
    for (double x : z) s += x;
    s /= static_cast<double>(p);
    for (double& x : z) x -= s;
  };
  Vector x0;
  if (!warm_start.empty() && warm_start.size() == p) {
    x0.assign(warm_start.begin(), warm_start.end());
    opt.projector(x0);
  }
  Vector phi = cg(LinearOperator::from_matrix(stiffness), b, opt, x0).x;
  const double shift = dot(m1, phi) / measure;
  for (double& x : phi) x -= shift;
  return phi;
}

EnergyParts discrete_energy_parts(const Discretization& disc, std::span<const double> u, double eps, double sigma,
                                  double m, Vector* warm) {
  const std::size_t p = disc.p();
  if (u.size() != p) throw DimensionMismatch("discrete_energy: field length");
  EnergyParts e;
  e.gradient = 0.5 * eps * eps * dot(u, disc.stiffness.multiply(u));
  e.bulk = integrate_double_well(disc.mesh, u);
  if (sigma != 0.0) {
    Vector v(u.begin(), u.end());
    const double mean = discrete_mean(disc, v);
    for (double& x : v) x -= mean;
    // (U - m) and its mean-free part share the potential
    const Vector phi = inverse_laplacian_zero_mean(disc.stiffness, disc.mass, v, 1e-10,
                                                   warm != nullptr ? std::span<const double>(*warm)
                                                                   : std::span<const double>(),
                                                   &disc.laplace_precond);
    e.nonlocal = 0.5 * sigma * dot(v, disc.mass.multiply(phi));
    if (warm != nullptr) *warm = phi;
  }
  (void)m;
  return e;
}

double discrete_energy(const Discretization& disc, std::span<const double> u, double eps, double sigma, double m) {
  return discrete_energy_parts(disc, u, eps, sigma, m).total();
}

double StepStats::gmres_avg() const {
  if (gmres_iters.empty()) return 0.0;
  double s = 0.0;
  for (auto k : gmres_iters) s += static_cast<double>(k);
  return s / static_cast<double>(gmres_iters.size());
}

// ---------------------------------------------------------------------------

TimeStepper::TimeStepper(const Discretization& disc, const Params& params, const PrecondConfig& config)
    : disc_(disc),
      params_(params),
      ctx_(std::make_shared<const PrecondContext>(disc.mass, disc.stiffness, params.eps, params.sigma, params.dt,
                                                  params.inner)),
      factory_(ctx_, config) {
  params_.validate();
}

StepOutcome TimeStepper::step(std::span<const double> u_prev, std::span<const double> w_prev,
                              std::size_t step_index) {
  const auto start = Clock::now();
  const std::size_t p = disc_.p();
  if (u_prev.size() != p || w_prev.size() != p) throw DimensionMismatch("step: field length");

  StepOutcome out;
  out.u.assign(u_prev.begin(), u_prev.end());
  out.w.assign(w_prev.begin(), w_prev.end());
  StepStats& st = out.stats;
  st.step = step_index;
  st.t = static_cast<double>(step_index) * params_.dt;
  st.fp_converged = false;

  GmresOptions gopt;
  gopt.tol = params_.gmres_tol;
  gopt.max_iter = params_.gmres_max;
  gopt.restart = params_.restart;

  Vector b(2 * p), diff(p);
  for (std::size_t k = 1; k <= params_.fp_max; ++k) {
    const SparseMatrix l = assemble_weighted_mass(disc_.mesh, out.u);
    const std::span<const double> lag = params_.lag == ConcaveLag::PreviousStep ? u_prev : std::span<const double>(out.u);
    const RhsPair rhs = assemble_rhs(disc_.mass, disc_.mass_times_one, u_prev, lag, params_.sigma, params_.dt, params_.m);
    std::copy(rhs.f.begin(), rhs.f.end(), b.begin());
    std::copy(rhs.e.begin(), rhs.e.end(), b.begin() + static_cast<std::ptrdiff_t>(p));

    Vector x(2 * p, 0.0);
    if (norm2(b) != 0.0) {
      const BlockOperator system(disc_.mass, disc_.stiffness, l, params_.eps, params_.sigma, params_.dt);
      auto built = factory_.build(l, out.u);
      if (built.adaptive) ++st.adaptive_builds;
      st.max_depth = std::max(st.max_depth, built.depth);
      LinearOperator right;
      if (built.preconditioner) right = built.preconditioner->full_right_operator();
      const auto g0 = Clock::now();
      SolveResult res = gmres(system.as_operator(BlockForm::Full), b, built.preconditioner ? &right : nullptr, gopt);
      st.gmres_wall_s += seconds_since(g0);
      st.gmres_iters.push_back(res.report.iterations);
      st.last_solve = res.report;
      if (!res.report.converged) {
        throw SolverError(SolverError::Kind::NotConverged,
                          "GMRES did not converge at step " + std::to_string(step_index) + ", iterate " +
                              std::to_string(k) + " (relative residual " + std::to_string(res.report.final_residual) +
                              " after " + std::to_string(res.report.iterations) + " iterations)");
      }
      x = std::move(res.x);
    } else {
      st.gmres_iters.push_back(0);
    }

    for (std::size_t i = 0; i < p; ++i) diff[i] = x[i] - out.u[i];
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(p), out.u.begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(p), x.end(), out.w.begin());
    st.fp_iters = k;
    st.fp_residual = mass_norm(disc_.mass, diff);
    if (st.fp_residual <= params_.fp_tol) {
      st.fp_converged = true;
      break;
    }
  }
  if (!st.fp_converged && params_.abort_on_fp_max) {
    throw SolverError(SolverError::Kind::NotConverged, "fixed-point loop hit fp_max at step " +
                                                           std::to_string(step_index) + " (last update " +
                                                           sci(st.fp_residual) + ")");
  }
  for (std::size_t i = 0; i < p; ++i) diff[i] = out.u[i] - u_prev[i];
  st.change = mass_norm(disc_.mass, diff);
  st.mass = discrete_mean(disc_, out.u);
  st.wall_s = seconds_since(start);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t RunResult::total_fp_iters() const {
  std::size_t s = 0;
  for (const auto& st : steps) s += st.fp_iters;
  return s;
}

double RunResult::avg_gmres_iters() const {
  double total = 0.0;
  std::size_t solves = 0;
  for (const auto& st : steps) {
    for (auto k : st.gmres_iters) total += static_cast<double>(k);
    solves += st.gmres_iters.size();
  }
  return solves == 0 ? 0.0 : total / static_cast<double>(solves);
}

double RunResult::avg_fp_per_step() const {
  return steps.empty() ? 0.0 : static_cast<double>(total_fp_iters()) / static_cast<double>(steps.size());
}

double RunResult::cpu1() const {
  double w = 0.0;
  for (const auto& st : steps) w += st.wall_s;
  const auto n = total_fp_iters();
  return n == 0 ? 0.0 : w / static_cast<double>(n);
}

double RunResult::cpu2() const {
  double w = 0.0;
  for (const auto& st : steps) w += st.gmres_wall_s;
  const auto n = total_fp_iters();
  return n == 0 ? 0.0 : w / static_cast<double>(n);
}

RunResult run_simulation(const Discretization& disc, const Params& params, const PrecondConfig& config,
                         const RunOptions& options) {
  params.validate();
  config.validate();
  const std::size_t p = disc.p();
  RunResult result;
  result.u = options.u0.empty() ? initial_condition(disc, params.m, params.amplitude, params.seed) : options.u0;
  if (result.u.size() != p) throw DimensionMismatch("run_simulation: initial field length");
  result.w.assign(p, 0.0);
  result.initial_mass = discrete_mean(disc, result.u);
  if (std::abs(result.initial_mass - params.m) > 1e-12) {
    std::cerr << "warning: initial mean " << result.initial_mass << " differs from m = " << params.m
              << "; the nonlocal term will drive it towards m\n";
  }
  Vector phi_warm;
  result.initial_energy = discrete_energy_parts(disc, result.u, params.eps, params.sigma, params.m, &phi_warm).total();

  const std::size_t n_steps = params.steps();
  std::vector<std::size_t> snap_steps{0};
  for (double t : options.snapshot_times) {
    if (t < 0.0) continue;
    const auto s = static_cast<std::size_t>(std::llround(t / params.dt));
    if (s <= n_steps) snap_steps.push_back(s);
  }
  auto wants_snapshot = [&](std::size_t s) {
    return std::find(snap_steps.begin(), snap_steps.end(), s) != snap_steps.end();
  };
  auto take_snapshot = [&](std::size_t s) {
    if (!result.snapshots.empty() && result.snapshots.back().step == s) return;
    result.snapshots.push_back({s, static_cast<double>(s) * params.dt, result.u, result.w});
  };
  take_snapshot(0);

  TimeStepper stepper(disc, params, config);
  std::size_t done = 0;
  try {
    for (std::size_t n = 1; n <= n_steps; ++n) {
      StepOutcome o = stepper.step(result.u, result.w, n);
      result.u = std::move(o.u);
      result.w = std::move(o.w);
      o.stats.energy =
          discrete_energy_parts(disc, result.u, params.eps, params.sigma, params.m, &phi_warm).total();
      result.steps.push_back(std::move(o.stats));
      if (options.on_step) options.on_step(result.steps.back());
      done = n;
      if (wants_snapshot(n)) take_snapshot(n);
      if (params.ss_tol > 0.0 && result.steps.back().change < params.ss_tol) {
        result.steady_state = true;
        break;
      }
    }
  } catch (const Error& e) {
    result.completed = false;
    result.failure = e.what();
  }
  take_snapshot(done);
  return result;
}

}  // namespace okpc
