#pragma once

#include <memory>
#include <optional>
#include <string>

#include "okpc/block_operator.hpp"
#include "okpc/neumann_inverse.hpp"
#include "okpc/spd_inverse.hpp"

namespace okpc {

enum class PrecondKind { None, BT, EL, MHSS };
enum class AlphaStrategy { TraceA, TraceM4, Fixed };
/// How MHSS applies A^{-1}.
enum class AInverseKind { Neumann, Exact };

struct PrecondConfig {
  PrecondKind kind = PrecondKind::MHSS;
  AlphaStrategy alpha_strategy = AlphaStrategy::TraceA;
  double alpha_value = 0.0;  ///< used by Fixed
  /// c_s in eps_tilde = c_s max|u|^2 rho(M).
  double safety = 1.01;
  /// Series tolerance, static mode.
  double eps1 = 1e-8;
  /// Series tolerance, adaptive mode.
  double eps1_adaptive = 1e-8;
  /// Adaptive mode is used when ||L_base - L_new||_F < eps2 ||L_base||_F; 0 disables.
  double eps2 = 0.1;
  std::size_t max_depth = 2000;
  std::size_t hutchinson_probes = 32;
  std::uint64_t seed = 2024;
  AInverseKind a_inverse = AInverseKind::Neumann;

  void validate() const;
};

std::string to_string(PrecondKind kind);
PrecondKind precond_kind_from_string(const std::string& s);

/// Pieces that depend only on M, S and the time-step parameters; built
/// once per run and shared by every preconditioner of that run.
class PrecondContext {
 public:
  PrecondContext(SparseMatrix mass, SparseMatrix stiffness, double eps, double sigma, double dt,
                 InnerSolveOptions inner = {});

  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  std::size_t p() const noexcept { return mass_.rows(); }
  double eps() const noexcept { return eps_; }
  double sigma() const noexcept { return sigma_; }
  double dt() const noexcept { return dt_; }
  double zeta() const noexcept { return dt_ / (1.0 + sigma_ * dt_); }
  const InnerSolveOptions& inner() const noexcept { return inner_; }

  const SpdInverse& mass_inverse() const noexcept { return mass_inv_; }
  /// (M + eps sqrt(zeta) S)^{-1}
  const SpdInverse& k_factor_inverse() const noexcept { return k_factor_inv_; }
  /// M^2, formed lazily.
  const SparseMatrix& mass_squared() const;
  /// rho(M) by power iteration, cached.
  double mass_spectral_radius() const;

  /// K~ v = (M + eps sqrt(zeta) S) M^{-1} (M + eps sqrt(zeta) S) v
  void apply_k_tilde(std::span<const double> v, std::span<double> out) const;
  /// K~^{-1} v = (M + eps sqrt(zeta) S)^{-1} M (M + eps sqrt(zeta) S)^{-1} v
  void apply_k_tilde_inverse(std::span<const double> v, std::span<double> out) const;

 private:
  SparseMatrix mass_, stiffness_, k_factor_;
  double eps_, sigma_, dt_;
  InnerSolveOptions inner_;
  SpdInverse mass_inv_, k_factor_inv_;
  mutable std::optional<SparseMatrix> mass_squared_;
  mutable double rho_mass_ = -1.0;
};

/// A block preconditioner. apply() inverts the preconditioner in its own
/// form (FULL for BT, row-scaled FULL for EL, SADDLE for MHSS);
/// full_right_operator() turns it into a right preconditioner of the FULL
/// system.
class BlockPreconditioner {
 public:
  virtual ~BlockPreconditioner() = default;
  virtual PrecondKind kind() const = 0;
  std::size_t size() const noexcept { return 2 * ctx_->p(); }
  /// z = P^{-1} r
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
  /// y = P x
  virtual void forward(std::span<const double> x, std::span<double> y) const = 0;
  /// Operator R with A_full R similar to P^{-1} (own form). Holds a pointer
  /// to this object.
  virtual LinearOperator full_right_operator() const;
  LinearOperator inverse_operator() const;

 protected:
  explicit BlockPreconditioner(std::shared_ptr<const PrecondContext> ctx) : ctx_(std::move(ctx)) {}
  std::shared_ptr<const PrecondContext> ctx_;
};

/// [(1+sigma dt) M, 0; -(eps^2 S + L), K~]
class BlockTriangular final : public BlockPreconditioner {
 public:
  BlockTriangular(std::shared_ptr<const PrecondContext> ctx, SparseMatrix weighted_mass);
  PrecondKind kind() const override { return PrecondKind::BT; }
  void apply(std::span<const double> r, std::span<double> z) const override;
  void forward(std::span<const double> x, std::span<double> y) const override;

 private:
  SparseMatrix l_;
};

/// [M, zeta S; -eps^2 S, M + 2 eps sqrt(zeta) S], independent of L.
class EliminatedL final : public BlockPreconditioner {
 public:
  explicit EliminatedL(std::shared_ptr<const PrecondContext> ctx);
  PrecondKind kind() const override { return PrecondKind::EL; }
  void apply(std::span<const double> r, std::span<double> z) const override;
  void forward(std::span<const double> x, std::span<double> y) const override;
  LinearOperator full_right_operator() const override;
};

/// (1/alpha) diag(A, alpha I) [alpha I, -M; M, B] = [A, -A M / alpha; M, B],
/// B = zeta S.
class Mhss final : public BlockPreconditioner {
 public:
  /// a_forward applies A, a_inverse approximates A^{-1}.
  Mhss(std::shared_ptr<const PrecondContext> ctx, LinearOperator a_forward, LinearOperator a_inverse, double alpha);
  PrecondKind kind() const override { return PrecondKind::MHSS; }
  double alpha() const noexcept { return alpha_; }
  void apply(std::span<const double> r, std::span<double> z) const override;
  void forward(std::span<const double> x, std::span<double> y) const override;
  LinearOperator full_right_operator() const override;

 private:
  LinearOperator a_forward_, a_inverse_;
  double alpha_;
  SpdInverse d_inverse_;  ///< (B + M^2 / alpha)^{-1}
};

/// trace(A) / p with A = eps^2 S + L.
double alpha_trace_a(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass, double eps);
/// trace(M^4) / trace(M^2 A^{-1} M^2), both traces by Hutchinson probing
/// with `probes` Rademacher vectors.
double alpha_trace_m4(const SparseMatrix& mass, const SparseMatrix& mass_squared, const LinearOperator& a_inverse,
                      std::size_t probes, std::uint64_t seed);
/// 2 l1 lp / (l1 + lp)
double alpha_optimal(double lambda_min, double lambda_max);
/// max_i |1 - alpha / lambda_i|
double sigma_tilde(double alpha, std::span<const double> eigenvalues_a);

struct EpsTilde {
  double value = 0.0;
  bool fallback = false;  ///< u == 0: floor value used
};
/// c_s max|u|^2 rho(M); for u == 0 the square is replaced by machine epsilon.
EpsTilde select_eps_tilde(std::span<const double> u, double rho_mass, double safety);

/// Builds the preconditioner of each fixed-point iterate. Keeps the last
/// static Neumann inverse as the base of adaptive builds.
class PreconditionerFactory {
 public:
  PreconditionerFactory(std::shared_ptr<const PrecondContext> ctx, PrecondConfig config);

  struct Built {
    std::unique_ptr<BlockPreconditioner> preconditioner;
    double alpha = 0.0;
    double eps_tilde = 0.0;
    std::size_t depth = 0;
    bool adaptive = false;
    bool eps_tilde_fallback = false;
  };

  /// u_lagged is the field L was assembled from. Returns an empty
  /// preconditioner for kind None.
  Built build(const SparseMatrix& weighted_mass, std::span<const double> u_lagged);
  /// Forget the adaptive base.
  void reset();

  const PrecondConfig& config() const noexcept { return config_; }
  const std::shared_ptr<const PrecondContext>& context() const noexcept { return ctx_; }

 private:
  std::shared_ptr<const PrecondContext> ctx_;
  PrecondConfig config_;
  NeumannInverse base_;
  double base_l_norm_ = 0.0;
};

}  // namespace okpc
