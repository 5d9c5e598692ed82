#include "okpc/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets,
                                         bool symmetric) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw DimensionMismatch("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                              ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.symmetric_ = symmetric;
  m.row_offsets_.assign(rows + 1, 0);
  m.column_indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());

  std::size_t k = 0;
  while (k < triplets.size()) {
    const std::size_t r = triplets[k].row;
    const std::size_t c = triplets[k].col;
    double sum = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) sum += triplets[k++].value;
    if (sum != 0.0) {
      m.column_indices_.push_back(c);
      m.values_.push_back(sum);
      ++m.row_offsets_[r + 1];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];

  if (symmetric) {
    // Elementwise assembly of a symmetric form sums the same numbers in the
    // same order for (i,j) and (j,i), so the mirror images agree exactly.
    // Enforce it anyway to protect the flag against round-off in callers.
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t p = m.row_offsets_[i]; p < m.row_offsets_[i + 1]; ++p) {
        const std::size_t j = m.column_indices_[p];
        if (j <= i) continue;
        const auto begin = m.column_indices_.begin() + static_cast<std::ptrdiff_t>(m.row_offsets_[j]);
        const auto end = m.column_indices_.begin() + static_cast<std::ptrdiff_t>(m.row_offsets_[j + 1]);
        const auto it = std::lower_bound(begin, end, i);
        if (it == end || *it != i) throw Error("matrix flagged symmetric has an asymmetric pattern");
        m.values_[static_cast<std::size_t>(it - m.column_indices_.begin())] = m.values_[p];
      }
    }
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  std::vector<Triplet> t;
  t.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({i, i, diag[i]});
  return from_triplets(diag.size(), diag.size(), std::move(t), true);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto begin = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto end = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - column_indices_.begin())];
}

Vector SparseMatrix::diagonal_entries() const {
  Vector d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

double SparseMatrix::trace() const {
  double t = 0.0;
  for (double d : diagonal_entries()) t += d;
  return t;
}

double SparseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double SparseMatrix::inf_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) s += std::abs(values_[p]);
    best = std::max(best, s);
  }
  return best;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) {
    throw DimensionMismatch("spmv: matrix is " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                            ", x has " + std::to_string(x.size()) + ", y has " + std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) s += values_[p] * x[column_indices_[p]];
    y[i] = s;
  }
}

Vector SparseMatrix::multiply(std::span<const double> x) const {
  Vector y(rows_);
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= factor;
  if (factor == 0.0) return SparseMatrix::from_triplets(rows_, cols_, {}, symmetric_);
  return m;
}

bool SparseMatrix::is_structurally_symmetric_exact() const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (at(column_indices_[p], i) != values_[p]) return false;
    }
  }
  return true;
}

SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionMismatch("combine: shapes differ");
  std::vector<Triplet> t;
  t.reserve(a.nonzeros() + b.nonzeros());
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t p = a.row_offsets_[i]; p < a.row_offsets_[i + 1]; ++p) {
      t.push_back({i, a.column_indices_[p], alpha * a.values_[p]});
    }
    for (std::size_t p = b.row_offsets_[i]; p < b.row_offsets_[i + 1]; ++p) {
      t.push_back({i, b.column_indices_[p], beta * b.values_[p]});
    }
  }
  return SparseMatrix::from_triplets(a.rows_, a.cols_, std::move(t), a.symmetric_ && b.symmetric_);
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols_ != b.rows_) throw DimensionMismatch("sparse product: inner dimensions differ");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t p = a.row_offsets_[i]; p < a.row_offsets_[i + 1]; ++p) {
      const std::size_t k = a.column_indices_[p];
      for (std::size_t q = b.row_offsets_[k]; q < b.row_offsets_[k + 1]; ++q) {
        t.push_back({i, b.column_indices_[q], a.values_[p] * b.values_[q]});
      }
    }
  }
  // A*A with A symmetric is symmetric, but the two mirror entries are summed
  // in different orders; from_triplets copies the upper value down.
  const bool sym = a.symmetric_ && b.symmetric_ && &a == &b;
  return SparseMatrix::from_triplets(a.rows_, b.cols_, std::move(t), sym);
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace okpc
