#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "okpc/linear_operator.hpp"
#include "okpc/sparse_matrix.hpp"

namespace okpc {

using DenseMatrix = Eigen::MatrixXd;
using ComplexVector = std::vector<std::complex<double>>;

/// Largest dimension the dense routines accept.
inline constexpr std::size_t kDenseThreshold = 2000;

DenseMatrix to_dense(const SparseMatrix& a);

/// Column-by-column materialization of an operator (n applications).
DenseMatrix materialize(const LinearOperator& a, std::size_t threshold = kDenseThreshold);

/// Eigenvalues of A, or of B^{-1} A when b is given (B SPD; reduced by its
/// Cholesky factor). Sorted by real part, then imaginary part.
/// Throws SolverError(TooLarge) above the threshold and
/// SolverError(NotConverged) if QR does not converge in 100 n sweeps.
ComplexVector dense_eigenvalues(const DenseMatrix& a, const DenseMatrix* b = nullptr,
                                std::size_t threshold = kDenseThreshold);

/// Ascending eigenvalues of a symmetric matrix.
Vector symmetric_eigenvalues(const DenseMatrix& a, std::size_t threshold = kDenseThreshold);

/// Ascending eigenvalues of the symmetric-definite pencil (A, B).
Vector generalized_symmetric_eigenvalues(const DenseMatrix& a, const DenseMatrix& b,
                                         std::size_t threshold = kDenseThreshold);

double spectral_radius(const DenseMatrix& a, std::size_t threshold = kDenseThreshold);

/// 2-norm condition number from the extreme eigenvalues of A^T A.
double condition_number(const DenseMatrix& a, std::size_t threshold = kDenseThreshold);

}  // namespace okpc
