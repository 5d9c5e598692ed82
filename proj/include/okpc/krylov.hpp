#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "okpc/linear_operator.hpp"

namespace okpc {

/// Outcome of an iterative solve.
struct SolveReport {
  std::size_t iterations = 0;
  /// Relative residual norms ||r_k|| / ||b||, starting with k = 0.
  std::vector<double> residual_history;
  bool converged = false;
  double wall_time_s = 0.0;
  /// ||b - A x|| / ||b|| recomputed from the returned x.
  double final_residual = 0.0;
};

struct GmresOptions {
  double tol = 1e-10;
  std::size_t max_iter = 300;
  /// 0 means unrestarted.
  std::size_t restart = 0;
};

struct SolveResult {
  Vector x;
  SolveReport report;
};

/// Right-preconditioned GMRES: solves A M^{-1} y = b, x = M^{-1} y, so the
/// monitored residual is the residual of the original system. Arnoldi uses
/// modified Gram-Schmidt with one reorthogonalization pass.
///
/// Does not throw on non-convergence; check report.converged.
SolveResult gmres(const LinearOperator& a, std::span<const double> b, const LinearOperator* right_precond,
                  const GmresOptions& options = {});

struct CgOptions {
  double tol = 1e-12;
  std::size_t max_iter = 0;  ///< 0: 10 * n + 100
  /// Jacobi scaling; empty means unpreconditioned.
  Vector inverse_diagonal;
  /// General preconditioner; takes precedence over inverse_diagonal.
  LinearOperator preconditioner;
  /// Applied in place to every preconditioned residual (e.g. removal of a
  /// kernel component for consistent singular systems).
  std::function<void(std::span<double>)> projector;
  /// Label used in error messages.
  std::string label = "operator";
};

/// Preconditioned conjugate gradients for SPD operators.
///
/// Throws SolverError(Indefinite) when p^T A p <= 0 and
/// SolverError(NotConverged) when the tolerance is not reached.
SolveResult cg(const LinearOperator& a, std::span<const double> b, const CgOptions& options = {},
               std::span<const double> x0 = {});

struct PowerIterationResult {
  double estimate = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Dominant-magnitude estimate ||A x_k|| with x_k normalized iterates.
/// For symmetric A the estimate increases monotonically towards rho(A).
PowerIterationResult power_iteration(const LinearOperator& a, double tol = 1e-10, std::size_t max_iter = 20000,
                                     std::uint64_t seed = 12345);

}  // namespace okpc
