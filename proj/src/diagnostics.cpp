#include "okpc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "okpc/assembly.hpp"
#include "okpc/error.hpp"
#include "okpc/krylov.hpp"
#include "okpc/random.hpp"

namespace okpc {

DenseInstance::DenseInstance(const Discretization& disc, std::span<const double> u, const Params& params,
                             std::size_t threshold)
    : disc_(&disc), u_(u.begin(), u.end()), params_(params), threshold_(threshold) {
  if (2 * disc.p() > threshold) {
    throw SolverError(SolverError::Kind::TooLarge, "dense diagnostics need 2p <= " + std::to_string(threshold) +
                                                       " but p = " + std::to_string(disc.p()) +
                                                       "; reduce mesh.n");
  }
  if (u_.size() != disc.p()) throw DimensionMismatch("DenseInstance: state length");
  l_ = std::make_shared<const SparseMatrix>(assemble_weighted_mass(disc.mesh, u_));
  ctx_ = std::make_shared<const PrecondContext>(disc.mass, disc.stiffness, params.eps, params.sigma, params.dt,
                                                params.inner);
  system_ = std::make_shared<const BlockOperator>(disc.mass, disc.stiffness, *l_, params.eps, params.sigma, params.dt);
}

DenseMatrix DenseInstance::a_block() const {
  const double e2 = params_.eps * params_.eps;
  return e2 * stiffness() + weighted_mass_dense();
}

PreconditionerFactory::Built DenseInstance::build(const PrecondConfig& config) const {
  PreconditionerFactory factory(ctx_, config);
  return factory.build(*l_, u_);
}

DenseMatrix preconditioned_matrix(const LinearOperator& precond_inverse, const LinearOperator& system,
                                  std::size_t threshold) {
  if (precond_inverse.size() != system.size()) throw DimensionMismatch("preconditioned_matrix: sizes differ");
  const std::size_t n = system.size();
  LinearOperator composed(n, [&](std::span<const double> x, std::span<double> y) {
    const Vector ax = system(x);
    precond_inverse.apply(ax, y);
  });
  return materialize(composed, threshold);
}

SpectralReport spectrum_of(const DenseMatrix& a, std::string label) {
  SpectralReport r;
  r.label = std::move(label);
  r.eigenvalues = dense_eigenvalues(a, nullptr, static_cast<std::size_t>(a.rows()));
  if (!r.eigenvalues.empty()) {
    r.min_real = r.eigenvalues.front().real();
    r.max_real = r.eigenvalues.back().real();
  }
  for (const auto& z : r.eigenvalues) r.max_abs_imag = std::max(r.max_abs_imag, std::abs(z.imag()));
  return r;
}

void apply_bound(SpectralReport& r, double lo, double hi, bool claims_real, bool skip_unit) {
  r.has_bound = true;
  r.lo = lo;
  r.hi = hi;
  r.claims_real = claims_real;
  r.unit_count = 0;
  r.violations = 0;
  for (const auto& z : r.eigenvalues) {
    if (skip_unit && std::abs(z - 1.0) <= kRealTol) {
      ++r.unit_count;
      continue;
    }
    const bool real_ok = !claims_real || std::abs(z.imag()) <= kRealTol;
    const bool in_range = z.real() >= lo - kRealTol && z.real() <= hi + kRealTol;
    if (!real_ok || !in_range) ++r.violations;
  }
}

double lambda_plus(const DenseInstance& inst) {
  const Vector ev = generalized_symmetric_eigenvalues(inst.weighted_mass_dense(), inst.mass(), inst.threshold());
  return ev.empty() ? 0.0 : ev.back();
}

SpectralReport preconditioned_spectrum(const DenseInstance& inst, const PrecondConfig& config) {
  const Params& prm = inst.params();
  const BlockOperator& sys = inst.system();
  const double zeta = prm.zeta();
  if (config.kind == PrecondKind::None) {
    SpectralReport r = spectrum_of(inst.full(), "A");
    r.zeta = zeta;
    return r;
  }

  const auto built = inst.build(config);
  const LinearOperator inv = built.preconditioner->inverse_operator();
  SpectralReport r;
  switch (config.kind) {
    case PrecondKind::BT: {
      r = spectrum_of(preconditioned_matrix(inv, sys.as_operator(BlockForm::Full), inst.threshold()), "P_BT^-1 A");
      break;
    }
    case PrecondKind::EL: {
      const BlockOperator* s = &sys;
      LinearOperator scaled(sys.size(), [s](std::span<const double> x, std::span<double> y) {
        s->apply(BlockForm::Full, x, y);
        s->unscale_rows(y, y);
      });
      r = spectrum_of(preconditioned_matrix(inv, scaled, inst.threshold()), "P_EL^-1 A_hat");
      break;
    }
    case PrecondKind::MHSS: {
      r = spectrum_of(preconditioned_matrix(inv, sys.as_operator(BlockForm::Saddle), inst.threshold()),
                      "P_MHSS^-1 A_tilde");
      break;
    }
    case PrecondKind::None: break;
  }
  r.zeta = zeta;
  r.alpha = built.alpha;

  if (config.kind == PrecondKind::BT || config.kind == PrecondKind::EL) {
    r.lambda_plus = lambda_plus(inst);
    apply_bound(r, 0.5, 1.0 + std::sqrt(zeta) * r.lambda_plus / (4.0 * prm.eps), true, false);
  } else {
    const Vector eb = symmetric_eigenvalues(zeta * inst.stiffness(), inst.threshold());
    const Vector em = symmetric_eigenvalues(inst.mass(), inst.threshold());
    const Vector ea = symmetric_eigenvalues(inst.a_block(), inst.threshold());
    r.sigma_1 = eb.back();
    r.sigma_p = eb.front();
    r.c_1 = em.back();
    r.c_p = em.front();
    r.theta_1 = ea.back();
    r.theta_p = ea.front();
    const double a = built.alpha;
    const double lo = a * r.c_p * r.c_p / (r.theta_1 * (r.c_1 * r.c_1 + a * r.sigma_1));
    const double hi = a * (r.sigma_1 * r.theta_p + r.c_1 * r.c_1) / (r.theta_p * r.c_p * r.c_p);
    apply_bound(r, lo, hi, true, true);
  }
  return r;
}

std::vector<ConditionRow> condition_sweep(std::span<const std::size_t> mhats, const Params& params,
                                          std::size_t threshold) {
  std::vector<ConditionRow> rows;
  for (std::size_t mhat : mhats) {
    if (mhat < 3) throw InvalidMesh("condition sweep: need at least 3 vertices");
    if (2 * mhat > threshold) {
      throw SolverError(SolverError::Kind::TooLarge,
                        "condition sweep: 2 * " + std::to_string(mhat) + " exceeds the dense threshold");
    }
    const Discretization disc(build_mesh(1, mhat - 1));
    const Vector u0 = initial_condition(disc, params.m, params.amplitude, params.seed);
    const DenseInstance inst(disc, u0, params, threshold);
    rows.push_back({mhat, 2 * mhat, condition_number(inst.full(), threshold)});
  }
  return rows;
}

AdaptiveCheck adaptive_advantage_check(const DenseMatrix& l_k, const DenseMatrix& l_k1, const DenseMatrix& stiffness,
                                       double eps, double eps_tilde) {
  const auto n = l_k.rows();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const DenseMatrix p = eps * eps * stiffness + eps_tilde * id;
  const Eigen::LLT<DenseMatrix> pl(p);
  const DenseMatrix g_k = pl.solve(eps_tilde * id - l_k);
  const DenseMatrix g_k1 = pl.solve(eps_tilde * id - l_k1);
  const DenseMatrix h = (id - g_k).partialPivLu().solve(g_k1 - g_k);

  AdaptiveCheck c;
  const DenseMatrix diff = l_k - l_k1;
  const Vector ev = symmetric_eigenvalues(0.5 * (diff + diff.transpose()), static_cast<std::size_t>(n));
  c.min_eig_difference = ev.empty() ? 0.0 : ev.front();
  const double scale = std::max(l_k.norm(), 1e-300);
  c.hypothesis = c.min_eig_difference >= -1e-12 * scale;
  c.rho_adaptive = spectral_radius(h, static_cast<std::size_t>(n));
  c.rho_static = spectral_radius(g_k1, static_cast<std::size_t>(n));
  c.ordering_holds = c.rho_adaptive <= c.rho_static + 1e-12 && c.rho_static < 1.0;
  return c;
}

double mhss_iteration_radius(const DenseMatrix& a, const DenseMatrix& m, const DenseMatrix& b, double alpha) {
  const DenseMatrix m2 = m * m;
  const DenseMatrix d = b + m2 / alpha;
  const DenseMatrix f = m2 / alpha - m * a.llt().solve(m);
  const DenseMatrix t = d.llt().solve(f);
  return spectral_radius(t, static_cast<std::size_t>(t.rows()));
}

AlphaCurve alpha_curve(const DenseInstance& inst, std::size_t points) {
  AlphaCurve c;
  const DenseMatrix a = inst.a_block();
  const DenseMatrix m = inst.mass();
  const DenseMatrix b = inst.params().zeta() * inst.stiffness();
  const Vector ev = symmetric_eigenvalues(a, inst.threshold());
  const double l1 = ev.front(), lp = ev.back();
  c.alpha_star = alpha_optimal(l1, lp);
  c.sigma_tilde_star = sigma_tilde(c.alpha_star, ev);
  c.alpha_prac = alpha_trace_a(inst.context()->stiffness(), inst.weighted_mass(), inst.params().eps);
  c.sigma_tilde_prac = sigma_tilde(c.alpha_prac, ev);
  c.bound_holds = true;
  c.star_minimal = true;
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    const double alpha = l1 * std::pow(lp / l1, f);
    const double st = sigma_tilde(alpha, ev);
    const double rho = mhss_iteration_radius(a, m, b, alpha);
    c.alphas.push_back(alpha);
    c.sigma_tilde.push_back(st);
    c.rho.push_back(rho);
    if (rho > st + 1e-8) c.bound_holds = false;
    if (c.sigma_tilde_star > st + 1e-14) c.star_minimal = false;
  }
  return c;
}

std::size_t mhss_identity_gmres(const DenseInstance& inst, double alpha) {
  const auto& ctx = inst.context();
  const std::size_t p = inst.p();
  const double zeta = inst.params().zeta();
  LinearOperator a_fwd(p, [alpha](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
  });
  LinearOperator a_inv(p, [alpha](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / alpha;
  });
  const Mhss pc(ctx, a_fwd, a_inv, alpha);
  LinearOperator saddle(2 * p, [&](std::span<const double> x, std::span<double> y) {
    const auto x1 = x.subspan(0, p), x2 = x.subspan(p, p);
    const Vector mx1 = ctx->mass().multiply(x1), mx2 = ctx->mass().multiply(x2);
    const Vector sx2 = ctx->stiffness().multiply(x2);
    for (std::size_t i = 0; i < p; ++i) {
      y[i] = alpha * x1[i] - mx2[i];
      y[p + i] = mx1[i] + zeta * sx2[i];
    }
  });
  Rng rng(11);
  Vector b(2 * p);
  for (double& v : b) v = rng.symmetric();
  const LinearOperator right = pc.inverse_operator();
  GmresOptions opt;
  opt.tol = inst.params().gmres_tol;
  return gmres(saddle, b, &right, opt).report.iterations;
}

namespace {

double max_sorted_deviation(const ComplexVector& a, const ComplexVector& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

CertificateBundle theorem_certificates(const DenseInstance& inst, const PrecondConfig& config) {
  CertificateBundle b;
  PrecondConfig cfg = config;
  cfg.kind = PrecondKind::BT;
  b.bt = preconditioned_spectrum(inst, cfg);
  cfg.kind = PrecondKind::EL;
  b.el = preconditioned_spectrum(inst, cfg);
  b.el_bt_max_deviation = max_sorted_deviation(b.el.eigenvalues, b.bt.eigenvalues);
  cfg.kind = PrecondKind::MHSS;
  cfg.a_inverse = AInverseKind::Exact;
  b.mhss = preconditioned_spectrum(inst, cfg);
  b.mhss_identity_gmres_iters = mhss_identity_gmres(inst, b.mhss.alpha);

  // Next fixed-point iterate by a dense direct solve, then the ordering check
  // on the pair (L(u), L(u_next)).
  const Params& prm = inst.params();
  const std::size_t p = inst.p();
  const auto& ctx = inst.context();
  const Vector u(inst.state().begin(), inst.state().end());
  const Vector m1 = ctx->mass().multiply(Vector(p, 1.0));
  const RhsPair rhs = assemble_rhs(ctx->mass(), m1, u, u, prm.sigma, prm.dt, prm.m);
  Eigen::VectorXd rb(static_cast<Eigen::Index>(2 * p));
  for (std::size_t i = 0; i < p; ++i) {
    rb(static_cast<Eigen::Index>(i)) = rhs.f[i];
    rb(static_cast<Eigen::Index>(p + i)) = rhs.e[i];
  }
  const Eigen::VectorXd x = inst.full().partialPivLu().solve(rb);
  const Vector u_next(x.data(), x.data() + p);
  Vector both(u);
  both.insert(both.end(), u_next.begin(), u_next.end());
  const double et = select_eps_tilde(both, ctx->mass_spectral_radius(), config.safety).value;
  const DenseMatrix l_next = to_dense(assemble_weighted_mass(inst.discretization().mesh, u_next));
  b.adaptive = adaptive_advantage_check(inst.weighted_mass_dense(), l_next, inst.stiffness(), prm.eps, et);
  b.adaptive_applicable = b.adaptive.hypothesis;

  b.alpha = alpha_curve(inst);
  return b;
}

bool CertificateBundle::bt_pass() const { return bt.has_bound && bt.violations == 0; }
bool CertificateBundle::el_pass() const { return el_bt_max_deviation <= kRealTol; }
bool CertificateBundle::mhss_pass() const {
  return mhss.has_bound && mhss.violations == 0 && 2 * mhss.unit_count >= mhss.eigenvalues.size() &&
         mhss_identity_gmres_iters == 1;
}
bool CertificateBundle::adaptive_pass() const { return !adaptive_applicable || adaptive.ordering_holds; }
bool CertificateBundle::alpha_pass() const { return alpha.bound_holds && alpha.star_minimal; }
bool CertificateBundle::all_pass() const {
  return bt_pass() && el_pass() && mhss_pass() && adaptive_pass() && alpha_pass();
}

nlohmann::json to_json(const SpectralReport& r, bool with_eigenvalues) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["label"] = r.label;
  j["count"] = r.eigenvalues.size();
  j["min_real"] = r.min_real;
  j["max_real"] = r.max_real;
  j["max_abs_imag"] = r.max_abs_imag;
  j["zeta"] = r.zeta;
  j["alpha"] = r.alpha;
  if (r.has_bound) {
    j["bound"] = {{"lo", r.lo}, {"hi", r.hi}, {"claims_real", r.claims_real}, {"violations", r.violations},
                  {"unit_count", r.unit_count}};
  }
  j["lambda_plus"] = num(r.lambda_plus);
  j["sigma_1"] = num(r.sigma_1);
  j["sigma_p"] = num(r.sigma_p);
  j["c_1"] = num(r.c_1);
  j["c_p"] = num(r.c_p);
  j["theta_1"] = num(r.theta_1);
  j["theta_p"] = num(r.theta_p);
  if (with_eigenvalues) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& z : r.eigenvalues) ev.push_back({z.real(), z.imag()});
    j["eigenvalues"] = ev;
  }
  return j;
}

nlohmann::json to_json(const AdaptiveCheck& c) {
  return {{"rho_adaptive", c.rho_adaptive},
          {"rho_static", c.rho_static},
          {"hypothesis", c.hypothesis},
          {"ordering_holds", c.ordering_holds},
          {"min_eig_difference", c.min_eig_difference}};
}

nlohmann::json to_json(const AlphaCurve& c) {
  return {{"alpha", c.alphas},
          {"sigma_tilde", c.sigma_tilde},
          {"rho", c.rho},
          {"alpha_star", c.alpha_star},
          {"sigma_tilde_star", c.sigma_tilde_star},
          {"alpha_prac", c.alpha_prac},
          {"sigma_tilde_prac", c.sigma_tilde_prac},
          {"bound_holds", c.bound_holds},
          {"star_minimal", c.star_minimal}};
}

nlohmann::json to_json(const CertificateBundle& b) {
  nlohmann::json j;
  j["bt"] = to_json(b.bt);
  j["bt"]["pass"] = b.bt_pass();
  j["el"] = to_json(b.el);
  j["el_vs_bt"] = {{"max_deviation", b.el_bt_max_deviation}, {"pass", b.el_pass()}};
  j["mhss"] = to_json(b.mhss);
  j["mhss"]["identity_gmres_iterations"] = b.mhss_identity_gmres_iters;
  j["mhss"]["pass"] = b.mhss_pass();
  j["adaptive"] = to_json(b.adaptive);
  j["adaptive"]["applicable"] = b.adaptive_applicable;
  j["adaptive"]["pass"] = b.adaptive_pass();
  j["alpha"] = to_json(b.alpha);
  j["alpha"]["pass"] = b.alpha_pass();
  j["all_pass"] = b.all_pass();
  return j;
}

}  // namespace okpc
