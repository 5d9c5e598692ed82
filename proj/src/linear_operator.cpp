#include "okpc/linear_operator.hpp"

#include <algorithm>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

LinearOperator LinearOperator::from_matrix(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("linear operator needs a square matrix");
  return {a.rows(), [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); }};
}

LinearOperator LinearOperator::identity(std::size_t n) {
  return {n, [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); }};
}

void LinearOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size_ || y.size() != size_) {
    throw DimensionMismatch("operator of size " + std::to_string(size_) + " applied to vectors of size " +
                            std::to_string(x.size()) + " -> " + std::to_string(y.size()));
  }
  fn_(x, y);
}

Vector LinearOperator::operator()(std::span<const double> x) const {
  Vector y(size_);
  apply(x, y);
  return y;
}

}  // namespace okpc
