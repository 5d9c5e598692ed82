#pragma once

#include <memory>

#include "okpc/linear_operator.hpp"
#include "okpc/spd_inverse.hpp"

namespace okpc {

struct NeumannOptions {
  /// Series stops once a term is below tol times the accumulated sum.
  double tol = 1e-8;
  std::size_t max_depth = 2000;
  /// Seed of the probe vector that fixes the depth.
  std::uint64_t seed = 2024;
  InnerSolveOptions inner;
};

/// Truncated Neumann-series approximation of A^{-1}, A = eps^2 S + L.
///
/// Static mode splits A = P - Q with P = eps^2 S + et I, Q = et I - L and
/// applies P_d = (I + G + ... + G^{d-1}) P^{-1}, G = P^{-1} Q, by Horner
/// recursion y <- P^{-1}(Q y) + P^{-1} v.
///
/// Adaptive mode starts from an approximation B of A_k^{-1} and applies
/// (I + H + ... + H^{d-1}) B with H = B (L_k - L_{k+1}).
///
/// The depth is chosen once at build time from a seeded probe vector, so
/// the operator is linear. Copies share state.
class NeumannInverse {
 public:
  enum class Mode { Static, Adaptive };

  NeumannInverse() = default;

  /// Depth from the probe rule. Throws SolverError(Divergent) when the
  /// terms grow (the splitting needs P + Q > 0) and
  /// SolverError(NotConverged) when max_depth is reached.
  static NeumannInverse build_static(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass, double eps,
                                     double eps_tilde, const NeumannOptions& options = {});
  /// Fixed depth d >= 1, no probing.
  static NeumannInverse build_static_depth(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass,
                                           double eps, double eps_tilde, std::size_t depth,
                                           const NeumannOptions& options = {});

  /// base approximates (eps^2 S + base_weighted_mass)^{-1}.
  static NeumannInverse build_adaptive(LinearOperator base, const SparseMatrix& base_weighted_mass,
                                       const SparseMatrix& weighted_mass, const NeumannOptions& options = {});
  static NeumannInverse build_adaptive_depth(LinearOperator base, const SparseMatrix& base_weighted_mass,
                                             const SparseMatrix& weighted_mass, std::size_t depth);

  explicit operator bool() const noexcept { return static_cast<bool>(state_); }
  std::size_t size() const noexcept;
  std::size_t depth() const noexcept;
  Mode mode() const noexcept;
  /// 0 in adaptive mode.
  double eps_tilde() const noexcept;
  /// Weighted mass matrix of the operator this inverse approximates.
  const SparseMatrix& weighted_mass() const;

  void apply(std::span<const double> v, std::span<double> y) const;
  Vector apply(std::span<const double> v) const;
  LinearOperator as_operator() const;

 struct State;  // opaque

 private:
  std::shared_ptr<const State> state_;
};

}  // namespace okpc
