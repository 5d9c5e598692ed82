#pragma once

#include <cstddef>
#include <cstdint>

#include "okpc/spd_inverse.hpp"

namespace okpc {

/// Which iterate supplies the explicit concave term in the right-hand side.
enum class ConcaveLag {
  PreviousStep,     ///< -M U^{n-1}: the convex splitting proper
  PreviousIterate,  ///< -M U^{(n,k-1)}
};

/// Model and solver parameters of a run.
struct Params {
  double eps = 0.1;
  double sigma = 100.0;
  double dt = 0.01;
  double m = 0.0;
  double T = 0.0;
  double amplitude = 0.05;
  std::uint64_t seed = 1;

  double gmres_tol = 1e-10;
  std::size_t gmres_max = 300;
  std::size_t restart = 0;
  double fp_tol = 1e-9;
  std::size_t fp_max = 50;
  /// Stop when ||u^n - u^{n-1}||_M drops below this; 0 disables.
  double ss_tol = 1e-10;
  /// Abort the run when an iterate hits fp_max instead of continuing.
  bool abort_on_fp_max = false;
  ConcaveLag lag = ConcaveLag::PreviousStep;
  InnerSolveOptions inner;

  /// dt / (1 + sigma dt)
  double zeta() const noexcept { return dt / (1.0 + sigma * dt); }
  /// Number of time steps, round(T / dt).
  std::size_t steps() const;
  /// Throws ConfigError on invalid values.
  void validate() const;
};

}  // namespace okpc
