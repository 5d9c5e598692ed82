#include "okpc/spd_inverse.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "okpc/error.hpp"

namespace okpc {

struct SpdInverse::Impl {
  std::size_t n = 0;
  std::string label;
  InnerSolveOptions options;
  // Cholesky path
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  // CG path
  LinearOperator op;
  Vector inverse_diagonal;
  // keeps a matrix alive for `op`
  std::shared_ptr<const SparseMatrix> owned;
};

namespace {

Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nonzeros());
  const auto off = a.row_offsets();
  const auto col = a.column_indices();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      t.emplace_back(static_cast<int>(i), static_cast<int>(col[k]), val[k]);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Vector invert_diagonal(const Vector& d, const std::string& label) {
  Vector inv(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      throw SolverError(SolverError::Kind::Indefinite, "non-positive diagonal entry in " + label);
    }
    inv[i] = 1.0 / d[i];
  }
  return inv;
}

}  // namespace

SpdInverse SpdInverse::from_matrix(const SparseMatrix& a, std::string label, const InnerSolveOptions& options) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SpdInverse: matrix is not square (" + label + ")");
  auto impl = std::make_shared<Impl>();
  impl->n = a.rows();
  impl->label = std::move(label);
  impl->options = options;
  if (options.method == InnerSolveOptions::Method::Cholesky) {
    impl->llt.compute(to_eigen(a));
    if (impl->llt.info() != Eigen::Success) {
      throw SolverError(SolverError::Kind::Indefinite, "Cholesky factorization failed for " + impl->label);
    }
  } else {
    impl->owned = std::make_shared<const SparseMatrix>(a);
    impl->op = LinearOperator::from_matrix(*impl->owned);
    impl->inverse_diagonal = invert_diagonal(a.diagonal_entries(), impl->label);
  }
  SpdInverse out;
  out.impl_ = std::move(impl);
  return out;
}

SpdInverse SpdInverse::from_operator(LinearOperator a, Vector diagonal, std::string label,
                                     const InnerSolveOptions& options) {
  if (diagonal.size() != a.size()) throw DimensionMismatch("SpdInverse: diagonal length differs (" + label + ")");
  auto impl = std::make_shared<Impl>();
  impl->n = a.size();
  impl->label = std::move(label);
  impl->options = options;
  impl->options.method = InnerSolveOptions::Method::JacobiCg;
  impl->op = std::move(a);
  impl->inverse_diagonal = invert_diagonal(diagonal, impl->label);
  SpdInverse out;
  out.impl_ = std::move(impl);
  return out;
}

std::size_t SpdInverse::size() const noexcept { return impl_ ? impl_->n : 0; }

const std::string& SpdInverse::label() const {
  static const std::string empty;
  return impl_ ? impl_->label : empty;
}

void SpdInverse::solve(std::span<const double> b, std::span<double> x) const {
  if (!impl_) throw Error("SpdInverse: empty inverse");
  if (b.size() != impl_->n || x.size() != impl_->n) {
    throw DimensionMismatch("SpdInverse: vector length differs from " + impl_->label);
  }
  const auto n = static_cast<Eigen::Index>(impl_->n);
  if (impl_->options.method == InnerSolveOptions::Method::Cholesky) {
    Eigen::Map<const Eigen::VectorXd> bb(b.data(), n);
    Eigen::Map<Eigen::VectorXd> xx(x.data(), n);
    xx = impl_->llt.solve(bb);
    return;
  }
  CgOptions opt;
  opt.tol = impl_->options.cg_tol;
  opt.max_iter = impl_->options.cg_max_iter;
  opt.inverse_diagonal = impl_->inverse_diagonal;
  opt.label = impl_->label;
  const auto res = cg(impl_->op, b, opt);
  std::copy(res.x.begin(), res.x.end(), x.begin());
}

Vector SpdInverse::solve(std::span<const double> b) const {
  Vector x(size());
  solve(b, x);
  return x;
}

LinearOperator SpdInverse::as_operator() const {
  SpdInverse self = *this;
  return LinearOperator(size(), [self](std::span<const double> x, std::span<double> y) { self.solve(x, y); });
}

}  // namespace okpc
