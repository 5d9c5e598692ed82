#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace okpc {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-sparse-row matrix.
///
/// Column indices are strictly increasing within each row and no entry with
/// an exact zero value is stored. Instances are immutable once built and
/// may be shared read-only between threads.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Sorts by (row, col), sums duplicates in that order and drops exact
  /// zeros. The result is bit-identical for identical input sequences.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets,
                                    bool symmetric = false);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  bool symmetric() const noexcept { return symmetric_; }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> column_indices() const noexcept { return column_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Stored value at (i, j) or 0.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_entries() const;
  double trace() const;
  double frobenius_norm() const;
  /// Largest absolute row sum.
  double inf_norm() const;

  /// y = A x with a fixed left-to-right summation order per row.
  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector multiply(std::span<const double> x) const;

  /// alpha * A + beta * B on the union pattern.
  friend SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);
  friend SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);
  SparseMatrix scaled(double factor) const;

  /// Exact check of value(i,j) == value(j,i) over the stored pattern.
  bool is_structurally_symmetric_exact() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool symmetric_ = false;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> column_indices_;
  std::vector<double> values_;
};

SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// Small helpers over contiguous vectors.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace okpc
