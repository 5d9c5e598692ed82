#pragma once

#include <functional>
#include <string>
#include <vector>

#include "okpc/krylov.hpp"
#include "okpc/mesh.hpp"
#include "okpc/params.hpp"
#include "okpc/precond.hpp"
#include "okpc/sparse_matrix.hpp"
#include "okpc/spd_inverse.hpp"

namespace okpc {

/// Mesh plus the field-independent matrices.
struct Discretization {
  Mesh mesh;
  SparseMatrix mass;
  SparseMatrix stiffness;
  Vector mass_times_one;
  double measure = 0.0;  ///< 1^T M 1
  /// Factorization of S + M, the CG preconditioner for the zero-mean
  /// inverse Laplacian.
  SpdInverse laplace_precond;

  explicit Discretization(Mesh m);
  std::size_t p() const noexcept { return mass.rows(); }
};

/// u_i = m + amplitude xi_i, xi_i uniform on [-1, 1], then shifted so the
/// discrete mean 1^T M u / 1^T M 1 equals m.
Vector initial_condition(const Discretization& disc, double m, double amplitude, std::uint64_t seed);

/// 1^T M u / 1^T M 1
double discrete_mean(const Discretization& disc, std::span<const double> u);

/// ||x||_M
double mass_norm(const SparseMatrix& mass, std::span<const double> x);

/// Solves S phi = M v with 1^T M phi = 0 by CG restricted to the
/// mean-zero subspace. v must have |1^T M v| / 1^T M 1 <= 1e-10.
/// `precond` approximates (S + c M)^{-1}; when empty one is factored here.
Vector inverse_laplacian_zero_mean(const SparseMatrix& stiffness, const SparseMatrix& mass, std::span<const double> v,
                                   double tol = 1e-10, std::span<const double> warm_start = {},
                                   const SpdInverse* precond = nullptr);

struct EnergyParts {
  double gradient = 0.0;  ///< eps^2/2 U^T S U
  double bulk = 0.0;      ///< integral of (1 - u^2)^2 / 4
  double nonlocal = 0.0;  ///< sigma/2 (U - m)^T M phi
  double total() const noexcept { return gradient + bulk + nonlocal; }
};

/// Discrete free energy. The nonlocal term uses the mean-free part of
/// U - m. `warm` (optional) carries the last potential between calls.
EnergyParts discrete_energy_parts(const Discretization& disc, std::span<const double> u, double eps, double sigma,
                                  double m, Vector* warm = nullptr);
double discrete_energy(const Discretization& disc, std::span<const double> u, double eps, double sigma, double m);

struct StepStats {
  std::size_t step = 0;
  double t = 0.0;
  std::size_t fp_iters = 0;
  bool fp_converged = true;
  double fp_residual = 0.0;  ///< last ||U^(k) - U^(k-1)||_M
  std::vector<std::size_t> gmres_iters;
  double energy = 0.0;
  double mass = 0.0;
  double change = 0.0;  ///< ||u^n - u^{n-1}||_M
  double wall_s = 0.0;
  double gmres_wall_s = 0.0;
  std::size_t adaptive_builds = 0;
  std::size_t max_depth = 0;
  /// Report of the last GMRES solve of the step.
  SolveReport last_solve;

  double gmres_avg() const;
};

struct StepOutcome {
  Vector u;
  Vector w;
  StepStats stats;
};

/// Advances one time step by the fixed-point loop, one preconditioned
/// GMRES solve of the FULL block system per iterate.
class TimeStepper {
 public:
  TimeStepper(const Discretization& disc, const Params& params, const PrecondConfig& config);

  /// Throws SolverError when GMRES fails, or when fp_max is hit and
  /// params.abort_on_fp_max is set.
  StepOutcome step(std::span<const double> u_prev, std::span<const double> w_prev, std::size_t step_index);

  const Params& params() const noexcept { return params_; }
  PreconditionerFactory& factory() noexcept { return factory_; }
  const std::shared_ptr<const PrecondContext>& context() const noexcept { return ctx_; }

 private:
  const Discretization& disc_;
  Params params_;
  std::shared_ptr<const PrecondContext> ctx_;
  PreconditionerFactory factory_;
};

struct Snapshot {
  std::size_t step = 0;
  double t = 0.0;
  Vector u;
  Vector w;
};

struct RunResult {
  Vector u;
  Vector w;
  double initial_energy = 0.0;
  double initial_mass = 0.0;
  std::vector<StepStats> steps;
  std::vector<Snapshot> snapshots;
  bool completed = true;
  bool steady_state = false;
  std::string failure;

  /// T_pc: total fixed-point iterates.
  std::size_t total_fp_iters() const;
  /// IT: GMRES iterations per linear solve.
  double avg_gmres_iters() const;
  /// T_G: fixed-point iterates per time step.
  double avg_fp_per_step() const;
  /// CPU1: wall seconds per fixed-point iterate.
  double cpu1() const;
  /// CPU2: GMRES wall seconds per fixed-point iterate.
  double cpu2() const;
};

struct RunOptions {
  std::vector<double> snapshot_times;
  /// Initial field; empty means initial_condition(m, amplitude, seed).
  Vector u0;
  /// Called after every accepted step.
  std::function<void(const StepStats&)> on_step;
};

/// Steps until T or until ||u^n - u^{n-1}||_M < ss_tol. Solver failures do
/// not throw: the partial result has completed = false and a message.
RunResult run_simulation(const Discretization& disc, const Params& params, const PrecondConfig& config,
                         const RunOptions& options = {});

}  // namespace okpc
