#include "okpc/precond.hpp"

#include <cmath>
#include <limits>

#include "okpc/error.hpp"
#include "okpc/krylov.hpp"
#include "okpc/random.hpp"

namespace okpc {

void PrecondConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(safety > 1.0, "precond.safety must exceed 1");
  require(eps1 > 0.0 && eps1 < 1.0, "precond.eps1 must lie in (0, 1)");
  require(eps1_adaptive > 0.0 && eps1_adaptive < 1.0, "adaptive series tolerance must lie in (0, 1)");
  require(eps2 >= 0.0, "precond.eps2 must be nonnegative");
  require(max_depth >= 1, "series depth cap must be at least 1");
  require(hutchinson_probes >= 1, "at least one trace probe is needed");
  require(alpha_strategy != AlphaStrategy::Fixed || (std::isfinite(alpha_value) && alpha_value > 0.0),
          "a fixed alpha must be positive");
}

std::string to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::None: return "NONE";
    case PrecondKind::BT: return "BT";
    case PrecondKind::EL: return "EL";
    case PrecondKind::MHSS: return "MHSS";
  }
  return "?";
}

PrecondKind precond_kind_from_string(const std::string& s) {
  if (s == "NONE" || s == "none") return PrecondKind::None;
  if (s == "BT" || s == "bt") return PrecondKind::BT;
  if (s == "EL" || s == "el") return PrecondKind::EL;
  if (s == "MHSS" || s == "mhss") return PrecondKind::MHSS;
  throw ConfigError("unknown preconditioner kind '" + s + "' (expected NONE, BT, EL or MHSS)");
}

// ---------------------------------------------------------------------------

PrecondContext::PrecondContext(SparseMatrix mass, SparseMatrix stiffness, double eps, double sigma, double dt,
                               InnerSolveOptions inner)
    : mass_(std::move(mass)), stiffness_(std::move(stiffness)), eps_(eps), sigma_(sigma), dt_(dt), inner_(inner) {
  if (stiffness_.rows() != mass_.rows()) throw DimensionMismatch("PrecondContext: M and S differ in size");
  k_factor_ = combine(1.0, mass_, eps_ * std::sqrt(zeta()), stiffness_);
  mass_inv_ = SpdInverse::from_matrix(mass_, "M", inner_);
  k_factor_inv_ = SpdInverse::from_matrix(k_factor_, "M + eps sqrt(zeta) S", inner_);
}

const SparseMatrix& PrecondContext::mass_squared() const {
  if (!mass_squared_) mass_squared_ = multiply(mass_, mass_);
  return *mass_squared_;
}

double PrecondContext::mass_spectral_radius() const {
  if (rho_mass_ < 0.0) {
    const auto est = power_iteration(LinearOperator::from_matrix(mass_), 1e-12, 100000);
    // Gershgorin bound as the certified fallback
    rho_mass_ = est.converged ? est.estimate : mass_.inf_norm();
  }
  return rho_mass_;
}

void PrecondContext::apply_k_tilde(std::span<const double> v, std::span<double> out) const {
  Vector a = k_factor_.multiply(v);
  Vector b = mass_inv_.solve(a);
  k_factor_.multiply(b, out);
}

void PrecondContext::apply_k_tilde_inverse(std::span<const double> v, std::span<double> out) const {
  Vector a = k_factor_inv_.solve(v);
  Vector b = mass_.multiply(a);
  k_factor_inv_.solve(b, out);
}

// ---------------------------------------------------------------------------

LinearOperator BlockPreconditioner::full_right_operator() const { return inverse_operator(); }

LinearOperator BlockPreconditioner::inverse_operator() const {
  const BlockPreconditioner* self = this;
  return LinearOperator(size(), [self](std::span<const double> r, std::span<double> z) { self->apply(r, z); });
}

BlockTriangular::BlockTriangular(std::shared_ptr<const PrecondContext> ctx, SparseMatrix weighted_mass)
    : BlockPreconditioner(std::move(ctx)), l_(std::move(weighted_mass)) {
  if (l_.rows() != ctx_->p()) throw DimensionMismatch("BT: L has the wrong size");
}

void BlockTriangular::apply(std::span<const double> r, std::span<double> z) const {
  const std::size_t p = ctx_->p();
  if (r.size() != 2 * p || z.size() != 2 * p) throw DimensionMismatch("BT: vector length");
  const double c = 1.0 + ctx_->sigma() * ctx_->dt();
  const double e2 = ctx_->eps() * ctx_->eps();
  auto z1 = z.subspan(0, p);
  ctx_->mass_inverse().solve(r.subspan(0, p), z1);
  for (double& v : z1) v /= c;
  Vector t = ctx_->stiffness().multiply(z1);
  Vector lz = l_.multiply(z1);
  for (std::size_t i = 0; i < p; ++i) t[i] = r[p + i] + e2 * t[i] + lz[i];
  ctx_->apply_k_tilde_inverse(t, z.subspan(p, p));
}

void BlockTriangular::forward(std::span<const double> x, std::span<double> y) const {
  const std::size_t p = ctx_->p();
  if (x.size() != 2 * p || y.size() != 2 * p) throw DimensionMismatch("BT: vector length");
  const double c = 1.0 + ctx_->sigma() * ctx_->dt();
  const double e2 = ctx_->eps() * ctx_->eps();
  const auto x1 = x.subspan(0, p);
  Vector mx = ctx_->mass().multiply(x1);
  Vector sx = ctx_->stiffness().multiply(x1);
  Vector lx = l_.multiply(x1);
  Vector kx(p);
  ctx_->apply_k_tilde(x.subspan(p, p), kx);
  for (std::size_t i = 0; i < p; ++i) {
    y[i] = c * mx[i];
    y[p + i] = -e2 * sx[i] - lx[i] + kx[i];
  }
}

EliminatedL::EliminatedL(std::shared_ptr<const PrecondContext> ctx) : BlockPreconditioner(std::move(ctx)) {}

void EliminatedL::apply(std::span<const double> r, std::span<double> z) const {
  const std::size_t p = ctx_->p();
  if (r.size() != 2 * p || z.size() != 2 * p) throw DimensionMismatch("EL: vector length");
  const double e2 = ctx_->eps() * ctx_->eps();
  const Vector y = ctx_->mass_inverse().solve(r.subspan(0, p));
  Vector t = ctx_->stiffness().multiply(y);
  for (std::size_t i = 0; i < p; ++i) t[i] = r[p + i] + e2 * t[i];
  auto z2 = z.subspan(p, p);
  ctx_->apply_k_tilde_inverse(t, z2);
  const Vector sz = ctx_->stiffness().multiply(z2);
  const Vector msz = ctx_->mass_inverse().solve(sz);
  const double zeta = ctx_->zeta();
  for (std::size_t i = 0; i < p; ++i) z[i] = y[i] - zeta * msz[i];
}

void EliminatedL::forward(std::span<const double> x, std::span<double> y) const {
  const std::size_t p = ctx_->p();
  if (x.size() != 2 * p || y.size() != 2 * p) throw DimensionMismatch("EL: vector length");
  const double e2 = ctx_->eps() * ctx_->eps();
  const double zeta = ctx_->zeta();
  const double c = 2.0 * ctx_->eps() * std::sqrt(zeta);
  const auto x1 = x.subspan(0, p);
  const auto x2 = x.subspan(p, p);
  const Vector m1 = ctx_->mass().multiply(x1), s1 = ctx_->stiffness().multiply(x1);
  const Vector m2 = ctx_->mass().multiply(x2), s2 = ctx_->stiffness().multiply(x2);
  for (std::size_t i = 0; i < p; ++i) {
    y[i] = m1[i] + zeta * s2[i];
    y[p + i] = -e2 * s1[i] + m2[i] + c * s2[i];
  }
}

LinearOperator EliminatedL::full_right_operator() const {
  const EliminatedL* self = this;
  const double c = 1.0 + ctx_->sigma() * ctx_->dt();
  const std::size_t p = ctx_->p();
  return LinearOperator(size(), [self, c, p](std::span<const double> r, std::span<double> z) {
    Vector s(r.begin(), r.end());
    for (std::size_t i = 0; i < p; ++i) s[i] /= c;
    self->apply(s, z);
  });
}

Mhss::Mhss(std::shared_ptr<const PrecondContext> ctx, LinearOperator a_forward, LinearOperator a_inverse,
           double alpha)
    : BlockPreconditioner(std::move(ctx)), a_forward_(std::move(a_forward)), a_inverse_(std::move(a_inverse)),
      alpha_(alpha) {
  const std::size_t p = ctx_->p();
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw Error("MHSS: alpha must be positive");
  if (a_inverse_.size() != p || (a_forward_ && a_forward_.size() != p)) {
    throw DimensionMismatch("MHSS: A operators have the wrong size");
  }
  const double zeta = ctx_->zeta();
  const InnerSolveOptions& inner = ctx_->inner();
  if (inner.method == InnerSolveOptions::Method::Cholesky) {
    const SparseMatrix d = combine(zeta, ctx_->stiffness(), 1.0 / alpha_, ctx_->mass_squared());
    d_inverse_ = SpdInverse::from_matrix(d, "B + M^2/alpha", inner);
  } else {
    // M^2 applied as M (M x), never formed on this path.
    const std::shared_ptr<const PrecondContext> c = ctx_;
    const double a = alpha_;
    LinearOperator d(p, [c, zeta, a](std::span<const double> x, std::span<double> y) {
      const Vector mx = c->mass().multiply(x);
      const Vector mmx = c->mass().multiply(mx);
      c->stiffness().multiply(x, y);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = zeta * y[i] + mmx[i] / a;
    });
    // diag(M^2)_i = sum_j m_ij^2 for symmetric M
    Vector diag = ctx_->stiffness().diagonal_entries();
    const auto& m = ctx_->mass();
    const auto off = m.row_offsets();
    const auto val = m.values();
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0.0;
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * val[k];
      diag[i] = zeta * diag[i] + s / alpha_;
    }
    d_inverse_ = SpdInverse::from_operator(std::move(d), std::move(diag), "B + M^2/alpha", inner);
  }
}

void Mhss::apply(std::span<const double> r, std::span<double> z) const {
  const std::size_t p = ctx_->p();
  if (r.size() != 2 * p || z.size() != 2 * p) throw DimensionMismatch("MHSS: vector length");
  // z1 = alpha A^{-1} r1, z2 = r2 - M z1 / alpha, z1 /= alpha,
  // z2 = (B + M^2/alpha)^{-1} z2, z1 += M z2 / alpha
  auto z1 = z.subspan(0, p);
  auto z2 = z.subspan(p, p);
  a_inverse_.apply(r.subspan(0, p), z1);
  const Vector ms = ctx_->mass().multiply(z1);
  Vector t(p);
  for (std::size_t i = 0; i < p; ++i) t[i] = r[p + i] - ms[i];
  d_inverse_.solve(t, z2);
  const Vector mz = ctx_->mass().multiply(z2);
  for (std::size_t i = 0; i < p; ++i) z1[i] += mz[i] / alpha_;
}

void Mhss::forward(std::span<const double> x, std::span<double> y) const {
  const std::size_t p = ctx_->p();
  if (x.size() != 2 * p || y.size() != 2 * p) throw DimensionMismatch("MHSS: vector length");
  if (!a_forward_) throw Error("MHSS: forward application needs A");
  const auto x1 = x.subspan(0, p);
  const auto x2 = x.subspan(p, p);
  const Vector mx2 = ctx_->mass().multiply(x2);
  Vector t(p);
  for (std::size_t i = 0; i < p; ++i) t[i] = x1[i] - mx2[i] / alpha_;
  a_forward_.apply(t, y.subspan(0, p));
  const Vector mx1 = ctx_->mass().multiply(x1);
  const Vector sx2 = ctx_->stiffness().multiply(x2);
  const double zeta = ctx_->zeta();
  for (std::size_t i = 0; i < p; ++i) y[p + i] = mx1[i] + zeta * sx2[i];
}

LinearOperator Mhss::full_right_operator() const {
  const Mhss* self = this;
  const double c = 1.0 + ctx_->sigma() * ctx_->dt();
  const std::size_t p = ctx_->p();
  return LinearOperator(size(), [self, c, p](std::span<const double> r, std::span<double> z) {
    Vector s(2 * p);
    for (std::size_t i = 0; i < p; ++i) {
      s[i] = -r[p + i];
      s[p + i] = r[i] / c;
    }
    self->apply(s, z);
  });
}

// ---------------------------------------------------------------------------

double alpha_trace_a(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass, double eps) {
  const std::size_t p = stiffness.rows();
  if (p == 0) throw Error("alpha_trace_a: empty matrix");
  const double alpha = (eps * eps * stiffness.trace() + weighted_mass.trace()) / static_cast<double>(p);
  if (!(alpha > 0.0)) throw Error("alpha selection produced a non-positive value");
  return alpha;
}

double alpha_trace_m4(const SparseMatrix& mass, const SparseMatrix& mass_squared, const LinearOperator& a_inverse,
                      std::size_t probes, std::uint64_t seed) {
  const std::size_t p = mass.rows();
  Rng rng(seed);
  Vector z(p), m2z(p), az(p);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    for (double& v : z) v = rng.rademacher();
    mass_squared.multiply(z, m2z);
    a_inverse.apply(m2z, az);
    num += dot(m2z, m2z);  // z^T M^4 z
    den += dot(m2z, az);   // z^T M^2 A^{-1} M^2 z
  }
  const double alpha = num / den;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("alpha selection produced a non-positive value");
  return alpha;
}

double alpha_optimal(double lambda_min, double lambda_max) {
  if (!(lambda_min > 0.0) || !(lambda_max > 0.0)) throw Error("alpha_optimal: eigenvalues must be positive");
  return 2.0 * lambda_min * lambda_max / (lambda_min + lambda_max);
}

double sigma_tilde(double alpha, std::span<const double> eigenvalues_a) {
  double s = 0.0;
  for (double l : eigenvalues_a) s = std::max(s, std::abs(1.0 - alpha / l));
  return s;
}

EpsTilde select_eps_tilde(std::span<const double> u, double rho_mass, double safety) {
  if (!(safety > 1.0)) throw Error("select_eps_tilde: safety factor must exceed 1");
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, std::abs(v));
  EpsTilde out;
  double c2 = umax * umax;
  if (c2 == 0.0) {
    c2 = std::numeric_limits<double>::epsilon();
    out.fallback = true;
  }
  out.value = safety * c2 * rho_mass;
  return out;
}

// ---------------------------------------------------------------------------

PreconditionerFactory::PreconditionerFactory(std::shared_ptr<const PrecondContext> ctx, PrecondConfig config)
    : ctx_(std::move(ctx)), config_(config) {
  config_.validate();
}

void PreconditionerFactory::reset() {
  base_ = NeumannInverse();
  base_l_norm_ = 0.0;
}

PreconditionerFactory::Built PreconditionerFactory::build(const SparseMatrix& weighted_mass,
                                                          std::span<const double> u_lagged) {
  Built out;
  switch (config_.kind) {
    case PrecondKind::None: return out;
    case PrecondKind::BT: out.preconditioner = std::make_unique<BlockTriangular>(ctx_, weighted_mass); return out;
    case PrecondKind::EL: out.preconditioner = std::make_unique<EliminatedL>(ctx_); return out;
    case PrecondKind::MHSS: break;
  }

  const double eps = ctx_->eps();
  auto a = std::make_shared<const SparseMatrix>(combine(eps * eps, ctx_->stiffness(), 1.0, weighted_mass));
  LinearOperator a_forward(a->rows(), [a](std::span<const double> x, std::span<double> y) { a->multiply(x, y); });
  LinearOperator a_inverse;

  if (config_.a_inverse == AInverseKind::Exact) {
    a_inverse = SpdInverse::from_matrix(*a, "A = eps^2 S + L", ctx_->inner()).as_operator();
  } else {
    const EpsTilde et = select_eps_tilde(u_lagged, ctx_->mass_spectral_radius(), config_.safety);
    out.eps_tilde = et.value;
    out.eps_tilde_fallback = et.fallback;
    bool adaptive = false;
    if (base_ && config_.eps2 > 0.0) {
      const double diff = combine(1.0, base_.weighted_mass(), -1.0, weighted_mass).frobenius_norm();
      adaptive = diff < config_.eps2 * base_l_norm_;
    }
    NeumannOptions opt;
    opt.max_depth = config_.max_depth;
    opt.seed = config_.seed;
    opt.inner = ctx_->inner();
    NeumannInverse inv;
    if (adaptive) {
      opt.tol = config_.eps1_adaptive;
      inv = NeumannInverse::build_adaptive(base_.as_operator(), base_.weighted_mass(), weighted_mass, opt);
    } else {
      opt.tol = config_.eps1;
      inv = NeumannInverse::build_static(ctx_->stiffness(), weighted_mass, eps, et.value, opt);
      base_ = inv;
      base_l_norm_ = weighted_mass.frobenius_norm();
    }
    out.adaptive = adaptive;
    out.depth = inv.depth();
    a_inverse = inv.as_operator();
  }

  switch (config_.alpha_strategy) {
    case AlphaStrategy::TraceA: out.alpha = alpha_trace_a(ctx_->stiffness(), weighted_mass, eps); break;
    case AlphaStrategy::TraceM4:
      out.alpha = alpha_trace_m4(ctx_->mass(), ctx_->mass_squared(), a_inverse, config_.hutchinson_probes,
                                 config_.seed);
      break;
    case AlphaStrategy::Fixed: out.alpha = config_.alpha_value; break;
  }
  out.preconditioner = std::make_unique<Mhss>(ctx_, std::move(a_forward), std::move(a_inverse), out.alpha);
  return out;
}

}  // namespace okpc
