// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "okpc/assembly.hpp"
#include "okpc/dense.hpp"
#include "okpc/diagnostics.hpp"
#include "okpc/neumann_inverse.hpp"
#include "okpc/random.hpp"
#include "okpc/scheme.hpp"

using namespace okpc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Seeded state shared by the 1D runs and dense instances.
constexpr double kIcMean = 0.4;
constexpr double kIcAmplitude = 0.5;
constexpr std::uint64_t kIcSeed = 1;

DenseMatrix random_spd(std::size_t n, Rng& rng, double shift) {
  DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.symmetric();
  return b * b.transpose() + shift * DenseMatrix::Identity(n, n);
}

SparseMatrix from_dense(const DenseMatrix& a) {
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), a(i, j)});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

LinearOperator dense_operator(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  return LinearOperator(n, [a, n](std::span<const double> x, std::span<double> y) {
    Eigen::Map<Eigen::VectorXd>(y.data(), n) = a * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  });
}

// ---- 1, 2: energy and mass along a 1D run ---------------------------------

struct DissipationRun {
  bool done = false;
  RunResult result;
  double seconds = 0.0;
};

DissipationRun& dissipation_run() {
  static DissipationRun run;
  if (run.done) return run;
  const auto t0 = Clock::now();
  const Discretization disc(build_mesh(1, 256));
  Params p;
  p.eps = 0.05;
  p.sigma = 100;
  p.dt = p.eps * p.eps;
  p.T = 200 * p.dt;
  p.m = kIcMean;
  p.amplitude = kIcAmplitude;
  p.seed = kIcSeed;
  p.ss_tol = 0.0;
  run.result = run_simulation(disc, p, PrecondConfig{});
  run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  run.done = true;
  return run;
}

Outcome criterion_energy() {
  const DissipationRun& run = dissipation_run();
  const RunResult& r = run.result;
  if (!r.completed) return {false, "run failed: " + r.failure};
  double prev = r.initial_energy, worst = -INFINITY;
  for (const StepStats& s : r.steps) {
    worst = std::max(worst, (s.energy - prev) / std::abs(prev));
    prev = s.energy;
  }
  const bool ok = r.steps.size() == 200 && worst <= 1e-10 && run.seconds < 60.0;
  return {ok, fmt("steps=%zu max relative increase=%.3e E0=%.6f E200=%.6f time=%.1fs", r.steps.size(), worst,
                  r.initial_energy, prev, run.seconds)};
}

Outcome criterion_mass() {
  const RunResult& r = dissipation_run().result;
  if (!r.completed) return {false, "run failed: " + r.failure};
  double worst = std::abs(r.initial_mass - kIcMean);
  for (const StepStats& s : r.steps) worst = std::max(worst, std::abs(s.mass - kIcMean));
  return {worst <= 1e-8, fmt("max |mean(u^n) - m| = %.3e over %zu steps", worst, r.steps.size())};
}

// ---- 3, 4, 5: spectral certificates on 1D p = 100 -------------------------

struct CertificateRun {
  bool done = false;
  std::size_t p = 0;
  CertificateBundle bundle;
  double seconds = 0.0;
};

CertificateRun& certificate_run() {
  static CertificateRun run;
  if (run.done) return run;
  const auto t0 = Clock::now();
  const Discretization disc(build_mesh(1, 99));
  Params p;
  p.eps = 0.1;
  p.sigma = 100;
  p.dt = 0.01;
  p.m = kIcMean;
  const Vector u = initial_condition(disc, kIcMean, kIcAmplitude, kIcSeed);
  DenseInstance inst(disc, u, p);
  PrecondConfig cfg;
  cfg.alpha_strategy = AlphaStrategy::TraceA;
  run.bundle = theorem_certificates(inst, cfg);
  run.p = inst.p();
  run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  run.done = true;
  return run;
}

Outcome criterion_bt() {
  const CertificateRun& run = certificate_run();
  const SpectralReport& r = run.bundle.bt;
  const bool ok = !r.eigenvalues.empty() && r.max_abs_imag <= 1e-7 && r.violations == 0 && run.seconds < 30.0;
  return {ok, fmt("p=%zu n_eig=%zu re in [%.6f, %.6f] bound (%.1f, %.6f) max|Im|=%.2e violations=%zu time=%.1fs",
                  run.p, r.eigenvalues.size(), r.min_real, r.max_real, r.lo, r.hi, r.max_abs_imag, r.violations,
                  run.seconds)};
}

Outcome criterion_el() {
  const CertificateBundle& b = certificate_run().bundle;
  const bool ok = b.el.eigenvalues.size() == b.bt.eigenvalues.size() && b.el_bt_max_deviation <= 1e-7;
  return {ok, fmt("max sorted deviation EL vs BT = %.3e", b.el_bt_max_deviation)};
}

Outcome criterion_mhss() {
  const CertificateRun& run = certificate_run();
  const SpectralReport& r = run.bundle.mhss;
  const bool ok = r.unit_count >= run.p && r.violations == 0 && run.bundle.mhss_identity_gmres_iters == 1;
  return {ok, fmt("alpha=%.4e unit eigenvalues=%zu (p=%zu) interval [%.6f, %.6f] violations=%zu "
                  "GMRES with A=alpha I: %zu iteration(s)",
                  r.alpha, r.unit_count, run.p, r.lo, r.hi, r.violations, run.bundle.mhss_identity_gmres_iters)};
}

// ---- 6: series identities -------------------------------------------------

Outcome criterion_series_identities() {
  Rng rng(606);
  const std::size_t n = 5;
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  double worst_static = 0.0, worst_adaptive = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix s = random_spd(n, rng, 0.1);
    const DenseMatrix lk = 0.3 * random_spd(n, rng, 0.05);
    DenseMatrix w = 0.3 * random_spd(n, rng, 0.0);
    const double eps = 0.2 + 0.5 * rng.uniform01();
    const double et = 1.05 * symmetric_eigenvalues(lk).back();
    // scale the decrement so L_k1 stays positive semidefinite
    w *= 0.5 * symmetric_eigenvalues(lk).front() / symmetric_eigenvalues(w).back();
    const DenseMatrix lk1 = lk - w;

    const DenseMatrix p = eps * eps * s + et * id;
    const DenseMatrix gk = p.llt().solve(et * id - lk);
    const DenseMatrix gk1 = p.llt().solve(et * id - lk1);
    const DenseMatrix ak = eps * eps * s + lk, ak1 = eps * eps * s + lk1;
    const DenseMatrix h = (id - gk).inverse() * (gk1 - gk);
    const SparseMatrix ss = from_dense(s), slk = from_dense(lk), slk1 = from_dense(lk1);
    const LinearOperator base = dense_operator(ak.inverse());
    DenseMatrix gd = id, hd = id;
    for (std::size_t d = 1; d <= 6; ++d) {
      gd = gd * gk;
      hd = hd * h;
      const NeumannInverse st = NeumannInverse::build_static_depth(ss, slk, eps, et, d);
      worst_static = std::max(worst_static, (materialize(st.as_operator()) * ak - (id - gd)).norm());
      const NeumannInverse ad = NeumannInverse::build_adaptive_depth(base, slk, slk1, d);
      worst_adaptive = std::max(worst_adaptive, (materialize(ad.as_operator()) * ak1 - (id - hd)).norm());
    }
  }
  const bool ok = worst_static <= 1e-12 && worst_adaptive <= 1e-10;
  return {ok, fmt("20 instances, d=1..6: max ||P_d A - (I - G^d)||_F = %.2e, adaptive identity max = %.2e",
                  worst_static, worst_adaptive)};
}

// ---- 7: adaptive ordering -------------------------------------------------

Outcome criterion_adaptive_ordering() {
  Rng rng(707);
  int held = 0, trials = 100;
  double worst_static = 0.0, worst_margin = -INFINITY;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform01() * 8);
    const DenseMatrix s = random_spd(n, rng, 0.0);
    const DenseMatrix lk = random_spd(n, rng, 0.01) * (0.1 + rng.uniform01());
    DenseMatrix w = random_spd(n, rng, 0.0);
    w *= rng.uniform01() * symmetric_eigenvalues(lk).front() / symmetric_eigenvalues(w).back();
    const DenseMatrix lk1 = lk - w;
    const double eps = 0.05 + rng.uniform01();
    const double et = (1.0 + 0.5 * rng.uniform01()) * symmetric_eigenvalues(lk).back();
    const AdaptiveCheck c = adaptive_advantage_check(lk, lk1, s, eps, et);
    if (c.hypothesis && c.rho_adaptive <= c.rho_static && c.rho_static < 1.0) ++held;
    worst_static = std::max(worst_static, c.rho_static);
    worst_margin = std::max(worst_margin, c.rho_adaptive - c.rho_static);
  }
  return {held == trials, fmt("%d/%d trials with rho_adaptive <= rho_static < 1 (max rho_static=%.4f, "
                              "max rho_adaptive - rho_static=%.3e)",
                              held, trials, worst_static, worst_margin)};
}

// ---- 8: MHSS iteration bound ----------------------------------------------

Outcome criterion_alpha_bound() {
  const Discretization disc(build_mesh(1, 100));
  Params p;
  p.eps = 0.1;
  p.sigma = 100;
  p.dt = 0.01;
  p.m = kIcMean;
  const Vector u = initial_condition(disc, kIcMean, kIcAmplitude, kIcSeed);
  DenseInstance inst(disc, u, p);
  const AlphaCurve c = alpha_curve(inst, 20);
  double worst = -INFINITY;
  for (std::size_t i = 0; i < c.alphas.size(); ++i) worst = std::max(worst, c.rho[i] - c.sigma_tilde[i]);
  const double grid_min = *std::min_element(c.sigma_tilde.begin(), c.sigma_tilde.end());
  const bool ok = c.alphas.size() == 20 && c.bound_holds && c.star_minimal;
  return {ok, fmt("p=%zu grid=%zu max(rho - sigma~)=%.3e alpha*=%.4e sigma~(alpha*)=%.6f grid min sigma~=%.6f",
                  inst.p(), c.alphas.size(), worst, c.alpha_star, c.sigma_tilde_star, grid_min)};
}

// ---- 9: conditioning growth -----------------------------------------------

Outcome criterion_conditioning() {
  Params p;
  p.eps = 0.1;
  p.sigma = 100;
  p.dt = 0.01;
  p.m = kIcMean;
  p.amplitude = kIcAmplitude;
  p.seed = kIcSeed;
  const std::vector<std::size_t> mhats{100, 1000};
  const auto rows = condition_sweep(mhats, p);
  const double ref[2] = {4.07e2, 4.037e4};
  bool ok = rows.size() == 2;
  for (std::size_t i = 0; ok && i < 2; ++i) ok = rows[i].kappa >= ref[i] / 10 && rows[i].kappa <= ref[i] * 10;
  const double ratio = rows.size() == 2 ? rows[1].kappa / rows[0].kappa : 0.0;
  ok = ok && ratio >= 10 && ratio <= 1000;
  return {ok, fmt("kappa(100)=%.4e (ref 4.07e2) kappa(1000)=%.4e (ref 4.037e4) ratio=%.2f",
                  rows.size() > 0 ? rows[0].kappa : 0.0, rows.size() > 1 ? rows[1].kappa : 0.0, ratio)};
}

// ---- 10: benchmark behaviour ----------------------------------------------

Outcome criterion_benchmark() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double sigma : {100.0, 400.0}) {
    double it[2] = {0, 0};
    const std::size_t dofs[2] = {1000, 4000};
    for (int k = 0; k < 2; ++k) {
      const Discretization disc(build_mesh(1, dofs[k] - 1));
      Params p;
      p.eps = 0.02;
      p.sigma = sigma;
      p.dt = p.eps * p.eps;
      p.T = 100 * p.dt;
      p.m = kIcMean;
      p.amplitude = kIcAmplitude;
      p.seed = kIcSeed;
      PrecondConfig cfg;
      cfg.kind = PrecondKind::MHSS;
      cfg.alpha_strategy = AlphaStrategy::TraceM4;
      cfg.eps2 = 0.0;
      const RunResult r = run_simulation(disc, p, cfg);
      it[k] = r.avg_gmres_iters();
      const std::size_t tpc = r.total_fp_iters();
      const bool row_ok = r.completed && r.steps.size() == 100 && it[k] <= 30 && tpc >= 497 && tpc <= 981;
      ok = ok && row_ok;
      detail += fmt("[dof=%zu sigma=%g T_pc=%zu IT=%.2f]%s ", dofs[k], sigma, tpc, it[k], r.completed ? "" : " failed");
    }
    const double ratio = it[0] > 0 ? it[1] / it[0] : INFINITY;
    ok = ok && ratio <= 1.5;
    detail += fmt("ratio=%.3f; ", ratio);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  ok = ok && secs < 600.0;
  return {ok, detail + fmt("time=%.1fs", secs)};
}

// ---- 11: 2D morphology ----------------------------------------------------

Outcome criterion_morphology() {
  bool ok = true;
  std::string detail;
  const Discretization disc(build_mesh(2, 64));
  struct Case {
    double m, dt, T;
  };
  for (const Case& c : {Case{0.0, 0.01, 13.43}, Case{0.4, 0.0064, 22.4}}) {
    Params p;
    p.eps = 0.08;
    p.sigma = 10;
    p.dt = c.dt;
    p.T = c.T;
    p.m = c.m;
    p.amplitude = 0.05;
    p.seed = kIcSeed;
    PrecondConfig cfg;
    cfg.kind = PrecondKind::EL;
    const RunResult r = run_simulation(disc, p, cfg);
    std::size_t flat = 0;
    double prev = r.initial_energy;
    for (const StepStats& s : r.steps) {
      if (!(s.energy < prev)) ++flat;
      prev = s.energy;
    }
    std::size_t separated = 0;
    for (double v : r.u) separated += std::abs(v) > 0.5;
    const double frac = static_cast<double>(separated) / static_cast<double>(r.u.size());
    const bool case_ok = r.completed && flat == 0 && frac > 0.8;
    ok = ok && case_ok;
    detail += fmt("[m=%.1f steps=%zu%s non-decreasing steps=%zu E=%.6f frac(|u|>0.5)=%.3f] ", c.m, r.steps.size(),
                  r.steady_state ? " (steady)" : "", flat, prev, frac);
  }
  return {ok, detail};
}

// ---- 12: inverse Laplacian order ------------------------------------------

Outcome criterion_inverse_laplacian() {
  const double pi = std::numbers::pi;
  std::vector<double> errs;
  for (std::size_t n : {64, 128, 256}) {
    const Discretization disc(build_mesh(1, n));
    Vector v(disc.p());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::cos(pi * disc.mesh.vertices[i][0]);
    const Vector phi = inverse_laplacian_zero_mean(disc.stiffness, disc.mass, v);
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(phi[i] - v[i] / (pi * pi)));
    errs.push_back(err);
  }
  const double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
  const bool ok = o1 >= 1.8 && o1 <= 2.2 && o2 >= 1.8 && o2 <= 2.2;
  return {ok, fmt("max nodal errors %.3e %.3e %.3e, observed orders %.3f %.3f", errs[0], errs[1], errs[2], o1, o2)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"okpc acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"energy dissipation", criterion_energy},
      {"mass invariance", criterion_mass},
      {"BT spectrum bound", criterion_bt},
      {"EL/BT spectra agree", criterion_el},
      {"MHSS unit eigenvalues", criterion_mhss},
      {"Neumann series identities", criterion_series_identities},
      {"adaptive series ordering", criterion_adaptive_ordering},
      {"MHSS iteration bound over alpha", criterion_alpha_bound},
      {"condition number growth", criterion_conditioning},
      {"1D benchmark iterations", criterion_benchmark},
      {"2D morphology", criterion_morphology},
      {"inverse Laplacian order", criterion_inverse_laplacian},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s C%02d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
