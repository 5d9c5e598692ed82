#pragma once

#include "okpc/linear_operator.hpp"
#include "okpc/sparse_matrix.hpp"

namespace okpc {

enum class BlockForm {
  Full,    ///< [(1+sigma dt) M, dt S; -eps^2 S - L, M]
  Saddle,  ///< [eps^2 S + L, -M; M, zeta S]
};

/// The 2p x 2p linear system of one fixed-point iterate, applied
/// matrix-free. Holds references; M, S and L must outlive it.
class BlockOperator {
 public:
  BlockOperator(const SparseMatrix& mass, const SparseMatrix& stiffness, const SparseMatrix& weighted_mass, double eps,
                double sigma, double dt);

  std::size_t p() const noexcept { return p_; }
  std::size_t size() const noexcept { return 2 * p_; }
  double eps() const noexcept { return eps_; }
  double sigma() const noexcept { return sigma_; }
  double dt() const noexcept { return dt_; }
  double zeta() const noexcept { return dt_ / (1.0 + sigma_ * dt_); }
  const SparseMatrix& mass() const noexcept { return *m_; }
  const SparseMatrix& stiffness() const noexcept { return *s_; }
  const SparseMatrix& weighted_mass() const noexcept { return *l_; }

  void apply(BlockForm form, std::span<const double> x, std::span<double> y) const;
  LinearOperator as_operator(BlockForm form) const;

  /// Maps a FULL residual/rhs to the SADDLE one: (-r2, r1 / (1 + sigma dt)).
  void to_saddle(std::span<const double> r, std::span<double> out) const;
  /// Row scaling diag((1+sigma dt) I, I) removed: (r1 / (1 + sigma dt), r2).
  void unscale_rows(std::span<const double> r, std::span<double> out) const;

 private:
  const SparseMatrix* m_;
  const SparseMatrix* s_;
  const SparseMatrix* l_;
  double eps_, sigma_, dt_;
  std::size_t p_;
};

}  // namespace okpc
