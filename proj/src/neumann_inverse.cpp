#include "okpc/neumann_inverse.hpp"

#include <cmath>
#include <string>

#include "okpc/error.hpp"
#include "okpc/random.hpp"

namespace okpc {

struct NeumannInverse::State {
  Mode mode = Mode::Static;
  std::size_t n = 0;
  std::size_t depth = 1;
  double eps_tilde = 0.0;
  SparseMatrix weighted_mass;
  // static
  SpdInverse p_inverse;
  // adaptive: delta = L_base - L_new
  LinearOperator base;
  SparseMatrix delta;

  // c: first term, y <- T(y) + c
  void first_term(std::span<const double> v, std::span<double> c) const {
    if (mode == Mode::Static) {
      p_inverse.solve(v, c);
    } else {
      base.apply(v, c);
    }
  }
  // t <- K y, K = G (static) or H (adaptive)
  void next_term(std::span<const double> y, std::span<double> t, Vector& work) const {
    if (mode == Mode::Static) {
      weighted_mass.multiply(y, work);
      for (std::size_t i = 0; i < n; ++i) work[i] = eps_tilde * y[i] - work[i];
      p_inverse.solve(work, t);
    } else {
      delta.multiply(y, work);
      base.apply(work, t);
    }
  }
};

namespace {

std::size_t probe_depth(const NeumannInverse::State& s, const NeumannOptions& options) {
  Rng rng(options.seed);
  Vector v(s.n), term(s.n), next(s.n), acc(s.n), work(s.n);
  for (double& x : v) x = rng.symmetric();
  s.first_term(v, term);
  acc = term;
  double prev_norm = norm2(term);
  if (prev_norm == 0.0) return 1;
  std::size_t growth = 0;
  for (std::size_t d = 1; d < options.max_depth; ++d) {
    s.next_term(term, next, work);
    const double tn = norm2(next);
    if (tn <= options.tol * norm2(acc)) return d;
    growth = tn > prev_norm ? growth + 1 : 0;
    if (growth >= 8 || !std::isfinite(tn)) {
      throw SolverError(SolverError::Kind::Divergent,
                        "Neumann series terms grow: the splitting needs P + Q positive definite; increase eps_tilde");
    }
    axpy(1.0, next, acc);
    std::swap(term, next);
    prev_norm = tn;
  }
  throw SolverError(SolverError::Kind::NotConverged,
                    "Neumann series did not reach tolerance " + sci(options.tol) + " within " +
                        std::to_string(options.max_depth) + " terms (contraction too weak)");
}

std::shared_ptr<NeumannInverse::State> make_static(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass,
                                                   double eps, double eps_tilde, const NeumannOptions& options) {
  const std::size_t n = stiffness.rows();
  if (weighted_mass.rows() != n) throw DimensionMismatch("NeumannInverse: S and L differ in size");
  if (!(eps_tilde > 0.0)) throw Error("NeumannInverse: eps_tilde must be positive");
  auto s = std::make_shared<NeumannInverse::State>();
  s->mode = NeumannInverse::Mode::Static;
  s->n = n;
  s->eps_tilde = eps_tilde;
  s->weighted_mass = weighted_mass;
  const SparseMatrix p = combine(eps * eps, stiffness, eps_tilde, SparseMatrix::identity(n));
  s->p_inverse = SpdInverse::from_matrix(p, "P = eps^2 S + eps_tilde I", options.inner);
  return s;
}

std::shared_ptr<NeumannInverse::State> make_adaptive(LinearOperator base, const SparseMatrix& base_weighted_mass,
                                                     const SparseMatrix& weighted_mass) {
  const std::size_t n = weighted_mass.rows();
  if (base.size() != n || base_weighted_mass.rows() != n) {
    throw DimensionMismatch("NeumannInverse: adaptive base differs in size");
  }
  auto s = std::make_shared<NeumannInverse::State>();
  s->mode = NeumannInverse::Mode::Adaptive;
  s->n = n;
  s->weighted_mass = weighted_mass;
  s->base = std::move(base);
  s->delta = combine(1.0, base_weighted_mass, -1.0, weighted_mass);
  return s;
}

}  // namespace

NeumannInverse NeumannInverse::build_static(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass,
                                            double eps, double eps_tilde, const NeumannOptions& options) {
  auto s = make_static(stiffness, weighted_mass, eps, eps_tilde, options);
  s->depth = probe_depth(*s, options);
  NeumannInverse out;
  out.state_ = std::move(s);
  return out;
}

NeumannInverse NeumannInverse::build_static_depth(const SparseMatrix& stiffness, const SparseMatrix& weighted_mass,
                                                  double eps, double eps_tilde, std::size_t depth,
                                                  const NeumannOptions& options) {
  if (depth == 0) throw Error("NeumannInverse: depth must be at least 1");
  auto s = make_static(stiffness, weighted_mass, eps, eps_tilde, options);
  s->depth = depth;
  NeumannInverse out;
  out.state_ = std::move(s);
  return out;
}

NeumannInverse NeumannInverse::build_adaptive(LinearOperator base, const SparseMatrix& base_weighted_mass,
                                              const SparseMatrix& weighted_mass, const NeumannOptions& options) {
  auto s = make_adaptive(std::move(base), base_weighted_mass, weighted_mass);
  s->depth = probe_depth(*s, options);
  NeumannInverse out;
  out.state_ = std::move(s);
  return out;
}

NeumannInverse NeumannInverse::build_adaptive_depth(LinearOperator base, const SparseMatrix& base_weighted_mass,
                                                    const SparseMatrix& weighted_mass, std::size_t depth) {
  if (depth == 0) throw Error("NeumannInverse: depth must be at least 1");
  auto s = make_adaptive(std::move(base), base_weighted_mass, weighted_mass);
  s->depth = depth;
  NeumannInverse out;
  out.state_ = std::move(s);
  return out;
}

std::size_t NeumannInverse::size() const noexcept { return state_ ? state_->n : 0; }
std::size_t NeumannInverse::depth() const noexcept { return state_ ? state_->depth : 0; }
NeumannInverse::Mode NeumannInverse::mode() const noexcept { return state_ ? state_->mode : Mode::Static; }
double NeumannInverse::eps_tilde() const noexcept { return state_ ? state_->eps_tilde : 0.0; }

const SparseMatrix& NeumannInverse::weighted_mass() const {
  if (!state_) throw Error("NeumannInverse: empty");
  return state_->weighted_mass;
}

void NeumannInverse::apply(std::span<const double> v, std::span<double> y) const {
  if (!state_) throw Error("NeumannInverse: empty");
  const State& s = *state_;
  if (v.size() != s.n || y.size() != s.n) throw DimensionMismatch("NeumannInverse: vector length");
  Vector c(s.n), t(s.n), work(s.n);
  s.first_term(v, c);
  std::copy(c.begin(), c.end(), y.begin());
  for (std::size_t l = 1; l < s.depth; ++l) {
    s.next_term(y, t, work);
    for (std::size_t i = 0; i < s.n; ++i) y[i] = t[i] + c[i];
  }
}

Vector NeumannInverse::apply(std::span<const double> v) const {
  Vector y(size());
  apply(v, y);
  return y;
}

LinearOperator NeumannInverse::as_operator() const {
  const NeumannInverse self = *this;
  return LinearOperator(size(), [self](std::span<const double> x, std::span<double> y) { self.apply(x, y); });
}

}  // namespace okpc
