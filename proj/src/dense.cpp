#include "okpc/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

namespace {

void check_size(std::size_t n, std::size_t threshold, const char* what) {
  if (n > threshold) {
    throw SolverError(SolverError::Kind::TooLarge, std::string(what) + ": dimension " + std::to_string(n) +
                                                       " exceeds the dense threshold " + std::to_string(threshold) +
                                                       "; use a smaller mesh");
  }
}

void check_square(const DenseMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionMismatch(std::string(what) + ": matrix is not square");
}

}  // namespace

DenseMatrix to_dense(const SparseMatrix& a) {
  DenseMatrix d = DenseMatrix::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  const auto off = a.row_offsets();
  const auto col = a.column_indices();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[k])) = val[k];
    }
  }
  return d;
}

DenseMatrix materialize(const LinearOperator& a, std::size_t threshold) {
  const std::size_t n = a.size();
  check_size(n, threshold, "materialize");
  DenseMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Vector e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return d;
}

ComplexVector dense_eigenvalues(const DenseMatrix& a, const DenseMatrix* b, std::size_t threshold) {
  check_square(a, "dense_eigenvalues");
  const auto n = static_cast<std::size_t>(a.rows());
  check_size(n, threshold, "dense_eigenvalues");
  DenseMatrix work = a;
  if (b != nullptr) {
    if (b->rows() != a.rows() || b->cols() != a.cols()) throw DimensionMismatch("dense_eigenvalues: B has wrong shape");
    Eigen::LLT<DenseMatrix> llt(*b);
    if (llt.info() != Eigen::Success) throw SolverError(SolverError::Kind::Indefinite, "dense_eigenvalues: B is not SPD");
    // L^{-1} A L^{-T} is similar to B^{-1} A.
    const auto l = llt.matrixL();
    work = l.solve(work);
    work = l.solve(work.transpose()).transpose();
  }
  Eigen::EigenSolver<DenseMatrix> solver;
  solver.setMaxIterations(static_cast<Eigen::Index>(100 * std::max<std::size_t>(n, 1)));
  solver.compute(work, false);
  if (solver.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::NotConverged, "dense_eigenvalues: QR iteration did not converge");
  }
  const auto ev = solver.eigenvalues();
  ComplexVector out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

Vector symmetric_eigenvalues(const DenseMatrix& a, std::size_t threshold) {
  check_square(a, "symmetric_eigenvalues");
  check_size(static_cast<std::size_t>(a.rows()), threshold, "symmetric_eigenvalues");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::NotConverged, "symmetric_eigenvalues: did not converge");
  }
  const auto& ev = solver.eigenvalues();
  return Vector(ev.data(), ev.data() + ev.size());
}

Vector generalized_symmetric_eigenvalues(const DenseMatrix& a, const DenseMatrix& b, std::size_t threshold) {
  check_square(a, "generalized_symmetric_eigenvalues");
  check_size(static_cast<std::size_t>(a.rows()), threshold, "generalized_symmetric_eigenvalues");
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(a, b, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::NotConverged, "generalized_symmetric_eigenvalues: did not converge");
  }
  const auto& ev = solver.eigenvalues();
  return Vector(ev.data(), ev.data() + ev.size());
}

double spectral_radius(const DenseMatrix& a, std::size_t threshold) {
  double r = 0.0;
  for (const auto& z : dense_eigenvalues(a, nullptr, threshold)) r = std::max(r, std::abs(z));
  return r;
}

double condition_number(const DenseMatrix& a, std::size_t threshold) {
  check_square(a, "condition_number");
  const DenseMatrix ata = a.transpose() * a;
  const Vector ev = symmetric_eigenvalues(ata, threshold);
  if (ev.empty()) return 1.0;
  if (!(ev.front() > 0.0)) throw SolverError(SolverError::Kind::Singular, "condition_number: matrix is singular");
  return std::sqrt(ev.back() / ev.front());
}

}  // namespace okpc
