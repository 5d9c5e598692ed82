#include <cmath>
#include <memory>

#include "doctest.h"
#include "okpc/assembly.hpp"
#include "okpc/block_operator.hpp"
#include "okpc/dense.hpp"
#include "okpc/diagnostics.hpp"
#include "okpc/error.hpp"
#include "okpc/krylov.hpp"
#include "okpc/neumann_inverse.hpp"
#include "okpc/precond.hpp"
#include "okpc/random.hpp"
#include "okpc/scheme.hpp"

using namespace okpc;

namespace {

Vector random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.symmetric();
  return v;
}

SparseMatrix from_dense(const DenseMatrix& a) {
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), a(i, j)});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

DenseMatrix random_spd(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.symmetric();
  return b * b.transpose() + 0.5 * DenseMatrix::Identity(n, n);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct Setup {
  Discretization disc;
  Params params;
  Vector u;
  SparseMatrix l;
  std::shared_ptr<const PrecondContext> ctx;

  Setup(std::size_t n, double eps = 0.1, double sigma = 100.0, double dt = 0.01)
      : disc(build_mesh(1, n)) {
    params.eps = eps;
    params.sigma = sigma;
    params.dt = dt;
    u = initial_condition(disc, 0.2, 0.5, 3);
    l = assemble_weighted_mass(disc.mesh, u);
    ctx = std::make_shared<PrecondContext>(disc.mass, disc.stiffness, eps, sigma, dt);
  }
};

}  // namespace

TEST_CASE("block operator: saddle form is the permuted full form") {
  Setup s(9);
  BlockOperator op(s.disc.mass, s.disc.stiffness, s.l, s.params.eps, s.params.sigma, s.params.dt);
  const Vector x = random_vector(op.size(), 1);
  Vector yf(op.size()), ys(op.size()), t(op.size());
  op.apply(BlockForm::Full, x, yf);
  op.apply(BlockForm::Saddle, x, ys);
  op.to_saddle(yf, t);
  CHECK(max_diff(t, ys) < 1e-12);
}

TEST_CASE("BT: forward/inverse consistency") {
  Setup s(20);
  BlockTriangular bt(s.ctx, s.l);
  const Vector x = random_vector(bt.size(), 2);
  Vector r(bt.size()), z(bt.size());
  bt.forward(x, r);
  bt.apply(r, z);
  CHECK(max_diff(x, z) < 1e-9);
}

TEST_CASE("BT: with L = 0 the first block of P^{-1} A acts as identity on (x, 0)") {
  Setup s(12);
  const SparseMatrix zero = SparseMatrix::from_triplets(s.disc.p(), s.disc.p(), {});
  BlockTriangular bt(s.ctx, zero);
  BlockOperator op(s.disc.mass, s.disc.stiffness, zero, s.params.eps, s.params.sigma, s.params.dt);
  const std::size_t p = s.disc.p();
  Vector x(2 * p, 0.0);
  const Vector top = random_vector(p, 5);
  std::copy(top.begin(), top.end(), x.begin());
  Vector ax(2 * p), z(2 * p);
  op.apply(BlockForm::Full, x, ax);
  bt.apply(ax, z);
  CHECK(max_diff(std::span<const double>(z).first(p), top) < 1e-10);
}

TEST_CASE("EL: forward/inverse consistency and Schur identity") {
  Setup s(20);
  EliminatedL el(s.ctx);
  const Vector x = random_vector(el.size(), 3);
  Vector r(el.size()), z(el.size());
  el.forward(x, r);
  el.apply(r, z);
  CHECK(max_diff(x, z) < 1e-9);

  const std::size_t p = s.disc.p();
  const double eps = s.params.eps, zeta = s.params.zeta();
  const Vector v = random_vector(p, 4);
  Vector kt(p);
  s.ctx->apply_k_tilde(v, kt);
  const Vector mv = s.disc.mass.multiply(v), sv = s.disc.stiffness.multiply(v);
  const Vector minv_sv = s.ctx->mass_inverse().solve(sv);
  const Vector ssv = s.disc.stiffness.multiply(minv_sv);
  Vector lhs(p);
  for (std::size_t i = 0; i < p; ++i) lhs[i] = mv[i] + 2 * eps * std::sqrt(zeta) * sv[i] + eps * eps * zeta * ssv[i];
  CHECK(max_diff(lhs, kt) <= 1e-10 * std::max(1.0, norm2(kt)));
}

TEST_CASE("MHSS: matches the dense inverse on a p = 6 instance") {
  Setup s(5);
  const double eps = s.params.eps;
  const SparseMatrix a = combine(eps * eps, s.disc.stiffness, 1.0, s.l);
  const SpdInverse ainv = SpdInverse::from_matrix(a, "A");
  const double alpha = 0.37;
  Mhss mh(s.ctx, LinearOperator::from_matrix(a), ainv.as_operator(), alpha);
  const std::size_t p = s.disc.p();
  const DenseMatrix ad = to_dense(a), md = to_dense(s.disc.mass), bd = s.params.zeta() * to_dense(s.disc.stiffness);
  DenseMatrix pd(2 * p, 2 * p);
  pd << ad, -ad * md / alpha, md, bd;
  const Vector r = random_vector(2 * p, 6);
  Vector z(2 * p);
  mh.apply(r, z);
  const Eigen::VectorXd want = pd.lu().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), 2 * p));
  for (std::size_t i = 0; i < 2 * p; ++i) CHECK(std::abs(z[i] - want[i]) < 1e-8 * std::max(1.0, want.norm()));

  const Vector r2 = random_vector(2 * p, 7);
  Vector sum(2 * p), z2(2 * p), zs(2 * p);
  for (std::size_t i = 0; i < 2 * p; ++i) sum[i] = r[i] + r2[i];
  mh.apply(r2, z2);
  mh.apply(sum, zs);
  for (std::size_t i = 0; i < 2 * p; ++i) CHECK(std::abs(zs[i] - z[i] - z2[i]) < 1e-10);
}

TEST_CASE("MHSS: A = alpha I gives one GMRES iteration") {
  const Discretization disc(build_mesh(1, 20));
  Params params;
  const Vector u = initial_condition(disc, 0.0, 0.3, 1);
  DenseInstance inst(disc, u, params);
  CHECK(mhss_identity_gmres(inst, 0.8) == 1);
}

TEST_CASE("alpha selection") {
  CHECK(alpha_optimal(1.0, 3.0) == doctest::Approx(1.5));
  const Vector ev{1.0, 3.0};
  const double st = sigma_tilde(1.5, ev);
  CHECK(st == doctest::Approx(0.5));
  for (double a = 0.5; a < 3.0; a += 0.05) CHECK(sigma_tilde(a, ev) >= st - 1e-14);

  // A = c I: with S = 0 and L = c I the trace rule returns c
  const SparseMatrix zero = SparseMatrix::from_triplets(4, 4, {});
  const SparseMatrix ci = SparseMatrix::identity(4).scaled(2.5);
  const double a = alpha_trace_a(zero, ci, 0.1);
  CHECK(a == doctest::Approx(2.5));
  CHECK(sigma_tilde(a, Vector(4, 2.5)) == doctest::Approx(0.0));
}

TEST_CASE("alpha selection: sigma~ ordering on an assembled A") {
  const Discretization disc(build_mesh(1, 100));
  const Vector u = initial_condition(disc, 0.0, 0.5, 2);
  const SparseMatrix l = assemble_weighted_mass(disc.mesh, u);
  const double eps = 0.1;
  const SparseMatrix a = combine(eps * eps, disc.stiffness, 1.0, l);
  const Vector ev = symmetric_eigenvalues(to_dense(a));
  const double ap = alpha_trace_a(disc.stiffness, l, eps);
  const double as = alpha_optimal(ev.front(), ev.back());
  // the spectrum is wide, so alpha* sits near 2 lambda_min and sigma~ grows
  // monotonically above it
  CHECK(as < ap);
  CHECK(sigma_tilde(ap, ev) <= sigma_tilde(2 * ap, ev));
  CHECK(sigma_tilde(as, ev) <= sigma_tilde(ap / 4, ev));
  CHECK(sigma_tilde(ap / 4, ev) <= sigma_tilde(ap, ev));
}

TEST_CASE("alpha selection: Hutchinson trace ratio on a diagonal case") {
  // M = I, A = 2 I: trace(M^4) / trace(M^2 A^{-1} M^2) = 2 for any probes
  const SparseMatrix id = SparseMatrix::identity(10);
  const SparseMatrix two = id.scaled(2.0);
  const SpdInverse ainv = SpdInverse::from_matrix(two, "A");
  CHECK(alpha_trace_m4(id, id, ainv.as_operator(), 8, 1) == doctest::Approx(2.0));
}

TEST_CASE("eps tilde") {
  const Discretization disc(build_mesh(1, 10));
  const PrecondContext ctx(disc.mass, disc.stiffness, 0.1, 100, 0.01);
  const double rho = ctx.mass_spectral_radius();
  const EpsTilde e1 = select_eps_tilde(Vector(disc.p(), 1.0), rho, 1.01);
  CHECK(e1.value == doctest::Approx(1.01 * rho));
  CHECK_FALSE(e1.fallback);
  const EpsTilde e0 = select_eps_tilde(Vector(disc.p(), 0.0), rho, 1.01);
  CHECK(e0.fallback);
  CHECK(e0.value > 0.0);

  const Vector u = initial_condition(disc, 0.1, 0.9, 5);
  const SparseMatrix l = assemble_weighted_mass(disc.mesh, u);
  const EpsTilde et = select_eps_tilde(u, rho, 1.01);
  CHECK(power_iteration(LinearOperator::from_matrix(l)).estimate < et.value);
}

TEST_CASE("neumann: scalar series") {
  // P = 2, Q = 1: A = 1, G = 1/2, P_3 A = 1 - 1/8
  const SparseMatrix one = SparseMatrix::identity(1);
  const SparseMatrix zero = SparseMatrix::from_triplets(1, 1, {});
  // eps^2 S + et I = 2 with S = 1, eps = 1, et = 1; L = 0 gives Q = 1
  const NeumannInverse ni = NeumannInverse::build_static_depth(one, zero, 1.0, 1.0, 3);
  CHECK(ni.apply(Vector{1.0})[0] == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("neumann: P_d A = I - G^d on random SPD instances") {
  const std::size_t n = 5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DenseMatrix s = random_spd(n, seed);
    const double eps = 0.3, et = 0.7;
    const SparseMatrix ss = from_dense(s);
    const SparseMatrix zero = SparseMatrix::from_triplets(n, n, {});
    const DenseMatrix a = eps * eps * s;
    const DenseMatrix p = a + et * DenseMatrix::Identity(n, n);
    const DenseMatrix g = p.inverse() * (et * DenseMatrix::Identity(n, n));
    DenseMatrix gd = DenseMatrix::Identity(n, n);
    for (std::size_t d = 1; d <= 6; ++d) {
      gd = gd * g;
      const NeumannInverse ni = NeumannInverse::build_static_depth(ss, zero, eps, et, d);
      const DenseMatrix pda = materialize(ni.as_operator()) * a;
      CHECK((pda - (DenseMatrix::Identity(n, n) - gd)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("neumann: adaptive identity") {
  const std::size_t n = 5;
  const DenseMatrix s = random_spd(n, 41);
  DenseMatrix lk = random_spd(n, 42) * 0.2, lk1 = lk * 0.7;
  const double eps = 0.4, et = 1.1 * symmetric_eigenvalues(lk).back();
  const SparseMatrix ss = from_dense(s), slk = from_dense(lk), slk1 = from_dense(lk1);
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const DenseMatrix p = eps * eps * s + et * id;
  const DenseMatrix gk = p.inverse() * (et * id - lk), gk1 = p.inverse() * (et * id - lk1);
  const DenseMatrix h = (id - gk).inverse() * (gk1 - gk);
  const DenseMatrix ak1 = eps * eps * s + lk1;
  // exact base (I - G_k)^{-1} P^{-1} = A_k^{-1}
  const DenseMatrix ak_inv = (eps * eps * s + lk).inverse();
  LinearOperator base(n, [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<Eigen::VectorXd>(y.data(), n) = ak_inv * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  });
  DenseMatrix hd = id;
  for (std::size_t d = 1; d <= 6; ++d) {
    hd = hd * h;
    const NeumannInverse ni = NeumannInverse::build_adaptive_depth(base, slk, slk1, d);
    const DenseMatrix pa = materialize(ni.as_operator()) * ak1;
    CHECK((pa - (id - hd)).norm() <= 1e-10);
  }
}

TEST_CASE("neumann: probed depth meets the tolerance") {
  const Discretization disc(build_mesh(1, 40));
  const Vector u = initial_condition(disc, 0.0, 0.8, 9);
  const SparseMatrix l = assemble_weighted_mass(disc.mesh, u);
  const double eps = 0.1;
  const PrecondContext ctx(disc.mass, disc.stiffness, eps, 100, 0.01);
  const EpsTilde et = select_eps_tilde(u, ctx.mass_spectral_radius(), 1.01);
  const NeumannInverse ni = NeumannInverse::build_static(disc.stiffness, l, eps, et.value);
  CHECK(ni.depth() >= 1);
  const SparseMatrix a = combine(eps * eps, disc.stiffness, 1.0, l);
  const Vector b = random_vector(disc.p(), 10);
  const Vector x = ni.apply(b);
  const Vector ax = a.multiply(x);
  CHECK(max_diff(ax, b) / norm2(b) < 1e-5);
}

TEST_CASE("neumann: divergent splitting is reported") {
  const SparseMatrix one = SparseMatrix::identity(1);
  // et too small: Q = et - L negative enough that |G| > 1
  const SparseMatrix big = SparseMatrix::identity(1).scaled(10.0);
  try {
    NeumannInverse::build_static(one, big, 0.1, 0.01);
    FAIL("expected an error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::Divergent);
  }
}

TEST_CASE("adaptive advantage check") {
  const Discretization disc(build_mesh(1, 8));
  const DenseMatrix m = to_dense(disc.mass), s = to_dense(disc.stiffness);
  const double mu = 0.05, eps = 0.1;
  const double et = 1.01 * 2 * mu * symmetric_eigenvalues(m).back();
  const AdaptiveCheck same = adaptive_advantage_check(2 * mu * m, 2 * mu * m, s, eps, et);
  CHECK(same.rho_adaptive == doctest::Approx(0.0));
  CHECK(same.ordering_holds);
  const AdaptiveCheck down = adaptive_advantage_check(2 * mu * m, mu * m, s, eps, et);
  CHECK(down.hypothesis);
  CHECK(down.ordering_holds);
  CHECK(down.rho_adaptive <= down.rho_static);
  CHECK(down.rho_static < 1.0);
  const AdaptiveCheck up = adaptive_advantage_check(mu * m, 2 * mu * m, s, eps, et);
  CHECK_FALSE(up.hypothesis);
  CHECK_FALSE(up.ordering_holds);
}

TEST_CASE("factory: kinds and adaptive switch") {
  Setup s(30);
  PrecondConfig cfg;
  cfg.kind = PrecondKind::None;
  PreconditionerFactory none(s.ctx, cfg);
  CHECK_FALSE(none.build(s.l, s.u).preconditioner);

  cfg.kind = PrecondKind::MHSS;
  cfg.eps2 = 0.5;
  PreconditionerFactory f(s.ctx, cfg);
  auto b1 = f.build(s.l, s.u);
  CHECK_FALSE(b1.adaptive);
  CHECK(b1.alpha > 0.0);
  Vector u2 = s.u;
  for (double& v : u2) v *= 0.99;
  const SparseMatrix l2 = assemble_weighted_mass(s.disc.mesh, u2);
  auto b2 = f.build(l2, u2);
  CHECK(b2.adaptive);
  f.reset();
  CHECK_FALSE(f.build(l2, u2).adaptive);
}

TEST_CASE("precond kind names") {
  for (PrecondKind k : {PrecondKind::None, PrecondKind::BT, PrecondKind::EL, PrecondKind::MHSS})
    CHECK(precond_kind_from_string(to_string(k)) == k);
  CHECK_THROWS(precond_kind_from_string("ILU"));
}
