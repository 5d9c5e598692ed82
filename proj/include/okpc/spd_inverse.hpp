#pragma once

#include <memory>
#include <string>

#include "okpc/krylov.hpp"
#include "okpc/linear_operator.hpp"
#include "okpc/sparse_matrix.hpp"

namespace okpc {

struct InnerSolveOptions {
  enum class Method { Cholesky, JacobiCg };
  Method method = Method::Cholesky;
  double cg_tol = 1e-12;
  std::size_t cg_max_iter = 0;
};

/// Action of the inverse of a fixed SPD matrix, either by a sparse
/// Cholesky factorization (computed once) or by Jacobi-CG per call.
/// Copies share the underlying state.
class SpdInverse {
 public:
  SpdInverse() = default;

  /// Throws SolverError(Indefinite) if the factorization finds a
  /// non-positive pivot.
  static SpdInverse from_matrix(const SparseMatrix& a, std::string label, const InnerSolveOptions& options = {});

  /// Matrix-free variant: always Jacobi-CG with the given diagonal.
  static SpdInverse from_operator(LinearOperator a, Vector diagonal, std::string label,
                                  const InnerSolveOptions& options = {});

  std::size_t size() const noexcept;
  explicit operator bool() const noexcept { return static_cast<bool>(impl_); }
  const std::string& label() const;

  void solve(std::span<const double> b, std::span<double> x) const;
  Vector solve(std::span<const double> b) const;
  LinearOperator as_operator() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace okpc
