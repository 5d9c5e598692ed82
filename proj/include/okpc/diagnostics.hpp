#pragma once

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "okpc/block_operator.hpp"
#include "okpc/dense.hpp"
#include "okpc/params.hpp"
#include "okpc/precond.hpp"
#include "okpc/scheme.hpp"

namespace okpc {

/// Imaginary parts below this count as real.
inline constexpr double kRealTol = 1e-7;

struct SpectralReport {
  std::string label;
  ComplexVector eigenvalues;
  bool has_bound = false;
  double lo = 0.0;
  double hi = 0.0;
  bool claims_real = false;
  /// Eigenvalues excluded from the bound check (MHSS unit eigenvalues).
  std::size_t unit_count = 0;
  std::size_t violations = 0;
  double max_abs_imag = 0.0;
  double min_real = 0.0;
  double max_real = 0.0;

  double zeta = 0.0;
  double alpha = 0.0;
  double lambda_plus = std::numeric_limits<double>::quiet_NaN();  ///< lambda_max(M^{-1} L)
  double sigma_1 = std::numeric_limits<double>::quiet_NaN();      ///< lambda_max(B)
  double sigma_p = std::numeric_limits<double>::quiet_NaN();      ///< lambda_min(B)
  double c_1 = std::numeric_limits<double>::quiet_NaN();          ///< lambda_max(M)
  double c_p = std::numeric_limits<double>::quiet_NaN();          ///< lambda_min(M)
  double theta_1 = std::numeric_limits<double>::quiet_NaN();      ///< lambda_max(A)
  double theta_p = std::numeric_limits<double>::quiet_NaN();      ///< lambda_min(A)
};

/// One linearized system at a given state u (L assembled from u), in the
/// dense form used by the diagnostics. Matrices are shared with the
/// production operators; only the diagnostics materialize them.
class DenseInstance {
 public:
  DenseInstance(const Discretization& disc, std::span<const double> u, const Params& params,
                std::size_t threshold = kDenseThreshold);

  std::size_t p() const noexcept { return disc_->p(); }
  const Discretization& discretization() const noexcept { return *disc_; }
  const Params& params() const noexcept { return params_; }
  const SparseMatrix& weighted_mass() const noexcept { return *l_; }
  const BlockOperator& system() const noexcept { return *system_; }
  const std::shared_ptr<const PrecondContext>& context() const noexcept { return ctx_; }
  std::span<const double> state() const noexcept { return u_; }

  DenseMatrix mass() const { return to_dense(disc_->mass); }
  DenseMatrix stiffness() const { return to_dense(disc_->stiffness); }
  DenseMatrix weighted_mass_dense() const { return to_dense(*l_); }
  /// eps^2 S + L
  DenseMatrix a_block() const;
  DenseMatrix full() const { return materialize(system_->as_operator(BlockForm::Full), threshold_); }
  DenseMatrix saddle() const { return materialize(system_->as_operator(BlockForm::Saddle), threshold_); }

  /// Builds the preconditioner of the given kind at this state.
  PreconditionerFactory::Built build(const PrecondConfig& config) const;

  std::size_t threshold() const noexcept { return threshold_; }

 private:
  const Discretization* disc_;
  Vector u_;
  Params params_;
  std::shared_ptr<const SparseMatrix> l_;
  std::shared_ptr<const PrecondContext> ctx_;
  std::shared_ptr<const BlockOperator> system_;
  std::size_t threshold_;
};

/// Dense materialization of z -> P^{-1} (A x) for every unit vector x.
DenseMatrix preconditioned_matrix(const LinearOperator& precond_inverse, const LinearOperator& system,
                                  std::size_t threshold = kDenseThreshold);

/// Spectrum of the preconditioned operator of `config.kind` in its own
/// form: P_BT^{-1} A (FULL), P_EL^{-1} A^ (FULL with the first block row
/// divided by 1 + sigma dt), P_MHSS^{-1} A~ (SADDLE). Kind None gives the
/// raw FULL spectrum. Attaches the matching bound where one exists.
SpectralReport preconditioned_spectrum(const DenseInstance& inst, const PrecondConfig& config);

/// Generic report for an arbitrary dense matrix.
SpectralReport spectrum_of(const DenseMatrix& a, std::string label);

/// lambda_max(M^{-1} L)
double lambda_plus(const DenseInstance& inst);

/// Recounts violations of [lo, hi] (and realness) with tolerance kRealTol.
void apply_bound(SpectralReport& report, double lo, double hi, bool claims_real, bool skip_unit);

struct ConditionRow {
  std::size_t mhat = 0;  ///< vertices p
  std::size_t dof = 0;   ///< 2 p
  double kappa = 0.0;
};

/// kappa_2 of the FULL matrix at the first iterate of the first step from
/// the seeded initial condition, 1D meshes with mhat vertices.
std::vector<ConditionRow> condition_sweep(std::span<const std::size_t> mhats, const Params& params,
                                          std::size_t threshold = kDenseThreshold);

struct AdaptiveCheck {
  double rho_adaptive = 0.0;  ///< rho((I - G_k)^{-1} (G_{k+1} - G_k))
  double rho_static = 0.0;    ///< rho(G_{k+1})
  bool hypothesis = false;    ///< L_k - L_{k+1} positive semidefinite
  bool ordering_holds = false;
  double min_eig_difference = 0.0;
};

/// Dense check of the adaptive/static spectral-radius ordering; P = eps^2 S
/// + et I is shared by both splittings.
AdaptiveCheck adaptive_advantage_check(const DenseMatrix& l_k, const DenseMatrix& l_k1, const DenseMatrix& stiffness,
                                       double eps, double eps_tilde);

/// rho(T(alpha)) = rho(D^{-1} F), D = B + M^2/alpha, F = M^2/alpha - M A^{-1} M.
double mhss_iteration_radius(const DenseMatrix& a, const DenseMatrix& m, const DenseMatrix& b, double alpha);

struct AlphaCurve {
  std::vector<double> alphas;
  std::vector<double> sigma_tilde;
  std::vector<double> rho;
  double alpha_star = 0.0;
  double sigma_tilde_star = 0.0;
  double alpha_prac = 0.0;
  double sigma_tilde_prac = 0.0;
  bool bound_holds = false;  ///< rho <= sigma_tilde + 1e-8 everywhere
  bool star_minimal = false;
};

/// sigma~(alpha) and the dense rho(T(alpha)) on `points` log-spaced values
/// across [lambda_min(A), lambda_max(A)].
AlphaCurve alpha_curve(const DenseInstance& inst, std::size_t points = 20);

struct CertificateBundle {
  SpectralReport bt;
  SpectralReport el;
  SpectralReport mhss;
  double el_bt_max_deviation = 0.0;
  std::size_t mhss_identity_gmres_iters = 0;
  AdaptiveCheck adaptive;
  bool adaptive_applicable = false;
  AlphaCurve alpha;

  bool bt_pass() const;
  bool el_pass() const;
  bool mhss_pass() const;
  bool adaptive_pass() const;
  bool alpha_pass() const;
  bool all_pass() const;
};

/// Runs every certificate on the instance. Failures are recorded, not thrown.
CertificateBundle theorem_certificates(const DenseInstance& inst, const PrecondConfig& config);

/// GMRES iterations on A~ with A replaced by alpha I, preconditioned by
/// MHSS built with that same A.
std::size_t mhss_identity_gmres(const DenseInstance& inst, double alpha);

nlohmann::json to_json(const SpectralReport& r, bool with_eigenvalues = false);
nlohmann::json to_json(const AdaptiveCheck& c);
nlohmann::json to_json(const AlphaCurve& c);
nlohmann::json to_json(const CertificateBundle& b);

}  // namespace okpc
