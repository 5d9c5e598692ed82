#include "okpc/krylov.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "okpc/error.hpp"
#include "okpc/random.hpp"

namespace okpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

SolveResult gmres(const LinearOperator& a, std::span<const double> b, const LinearOperator* right_precond,
                  const GmresOptions& options) {
  const auto start = Clock::now();
  const std::size_t n = a.size();
  if (b.size() != n) throw DimensionMismatch("gmres: rhs length differs from operator size");
  if (!(options.tol > 0.0)) throw Error("gmres: tolerance must be positive");
  if (right_precond != nullptr && right_precond->size() != n) {
    throw DimensionMismatch("gmres: preconditioner size differs from operator size");
  }

  SolveResult result{Vector(n, 0.0), {}};
  SolveReport& rep = result.report;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.residual_history = {0.0};
    rep.converged = true;
    rep.wall_time_s = seconds_since(start);
    return result;
  }

  const std::size_t cycle = options.restart > 0 ? options.restart : options.max_iter;
  Vector r(b.begin(), b.end());
  Vector w(n), z(n);
  double true_rel = 1.0;
  rep.residual_history.push_back(1.0);

  while (rep.iterations < options.max_iter) {
    const double beta = norm2(r);
    std::vector<Vector> basis;
    basis.reserve(cycle + 1);
    basis.emplace_back(r);
    for (double& v : basis.back()) v /= beta;

    // Column-major Hessenberg, already rotated to upper triangular.
    std::vector<Vector> h;
    Vector cs, sn, g{beta};
    bool breakdown = false;

    for (std::size_t j = 0; j < cycle && rep.iterations < options.max_iter; ++j) {
      if (right_precond != nullptr) {
        right_precond->apply(basis[j], z);
        a.apply(z, w);
      } else {
        a.apply(basis[j], w);
      }
      Vector col(j + 2, 0.0);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i <= j; ++i) {
          const double c = dot(w, basis[i]);
          col[i] += c;
          axpy(-c, basis[i], w);
        }
      }
      col[j + 1] = norm2(w);
      const double subdiag = col[j + 1];

      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = t;
      }
      const double rho = std::hypot(col[j], col[j + 1]);
      const double c = rho == 0.0 ? 1.0 : col[j] / rho;
      const double s = rho == 0.0 ? 0.0 : col[j + 1] / rho;
      cs.push_back(c);
      sn.push_back(s);
      col[j] = rho;
      col[j + 1] = 0.0;
      g.push_back(-s * g[j]);
      g[j] = c * g[j];
      h.push_back(std::move(col));

      ++rep.iterations;
      const double estimate = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(estimate);

      if (subdiag < 1e-300) {
        breakdown = true;
        break;
      }
      if (estimate <= options.tol) break;
      basis.emplace_back(w);
      for (double& v : basis.back()) v /= subdiag;
    }

    // Back substitution on the triangular factor.
    const std::size_t k = h.size();
    Vector y(k, 0.0);
    for (std::size_t ii = k; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t jj = ii + 1; jj < k; ++jj) s -= h[jj][ii] * y[jj];
      y[ii] = h[ii][ii] != 0.0 ? s / h[ii][ii] : 0.0;
    }
    Vector update(n, 0.0);
    for (std::size_t jj = 0; jj < k; ++jj) axpy(y[jj], basis[jj], update);
    if (right_precond != nullptr) {
      right_precond->apply(update, z);
      axpy(1.0, z, result.x);
    } else {
      axpy(1.0, update, result.x);
    }

    a.apply(result.x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    true_rel = norm2(r) / bnorm;
    if (true_rel <= options.tol) {
      rep.converged = true;
      break;
    }
    // An exhausted Krylov space cannot reduce the residual further.
    if (breakdown) break;
  }

  rep.final_residual = true_rel;
  if (!rep.converged && rep.residual_history.back() <= options.tol) rep.residual_history.push_back(true_rel);
  rep.wall_time_s = seconds_since(start);
  return result;
}

SolveResult cg(const LinearOperator& a, std::span<const double> b, const CgOptions& options,
               std::span<const double> x0) {
  const auto start = Clock::now();
  const std::size_t n = a.size();
  if (b.size() != n) throw DimensionMismatch("cg: rhs length differs from operator size (" + options.label + ")");
  if (!options.inverse_diagonal.empty() && options.inverse_diagonal.size() != n) {
    throw DimensionMismatch("cg: Jacobi scaling has the wrong length (" + options.label + ")");
  }
  const std::size_t max_iter = options.max_iter > 0 ? options.max_iter : 10 * n + 100;

  SolveResult result{Vector(n, 0.0), {}};
  SolveReport& rep = result.report;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.residual_history = {0.0};
    rep.converged = true;
    rep.wall_time_s = seconds_since(start);
    return result;
  }

  Vector r(b.begin(), b.end());
  if (!x0.empty()) {
    if (x0.size() != n) throw DimensionMismatch("cg: initial guess has the wrong length");
    result.x.assign(x0.begin(), x0.end());
    Vector ax = a(result.x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
  }
  Vector z(n), q(n);
  const auto precondition = [&]() {
    if (options.preconditioner) {
      options.preconditioner.apply(r, z);
    } else if (options.inverse_diagonal.empty()) {
      z = r;
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = options.inverse_diagonal[i] * r[i];
    }
    if (options.projector) options.projector(z);
  };

  double rel = norm2(r) / bnorm;
  rep.residual_history.push_back(rel);
  if (rel <= options.tol) {
    rep.converged = true;
    rep.final_residual = rel;
    rep.wall_time_s = seconds_since(start);
    return result;
  }

  precondition();
  Vector p = z;
  double rz = dot(r, z);
  for (std::size_t k = 1; k <= max_iter; ++k) {
    a.apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      throw SolverError(SolverError::Kind::Indefinite,
                        "cg: non-positive curvature p^T A p = " + sci(pq) + " for " + options.label);
    }
    const double alpha = rz / pq;
    axpy(alpha, p, result.x);
    axpy(-alpha, q, r);
    rep.iterations = k;
    rel = norm2(r) / bnorm;
    rep.residual_history.push_back(rel);
    if (rel <= options.tol) {
      // confirm with the true residual; replace the recursive one if it drifted
      a.apply(result.x, q);
      for (std::size_t i = 0; i < n; ++i) q[i] = b[i] - q[i];
      const double true_rel = norm2(q) / bnorm;
      if (true_rel <= 10.0 * options.tol) {
        rel = true_rel;
        rep.converged = true;
        break;
      }
      r = q;
      rel = true_rel;
      precondition();
      rz = dot(r, z);
      p = z;
      continue;
    }
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  rep.final_residual = rel;
  rep.wall_time_s = seconds_since(start);
  if (!rep.converged) {
    throw SolverError(SolverError::Kind::NotConverged, "cg: " + options.label + " did not reach relative residual " +
                                                           sci(options.tol) + " in " +
                                                           std::to_string(max_iter) + " iterations (last " +
                                                           sci(rel) + ")");
  }
  return result;
}

PowerIterationResult power_iteration(const LinearOperator& a, double tol, std::size_t max_iter, std::uint64_t seed) {
  const std::size_t n = a.size();
  PowerIterationResult res;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Rng rng(seed);
  Vector x(n), y(n);
  for (double& v : x) v = rng.symmetric();
  const double x0 = norm2(x);
  for (double& v : x) v /= x0;

  double prev = -1.0;
  for (std::size_t k = 1; k <= max_iter; ++k) {
    a.apply(x, y);
    const double est = norm2(y);
    res.iterations = k;
    res.estimate = est;
    if (est == 0.0) {
      res.converged = true;
      return res;
    }
    if (prev >= 0.0 && std::abs(est - prev) <= tol * est) {
      res.converged = true;
      return res;
    }
    prev = est;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / est;
  }
  return res;
}

}  // namespace okpc
