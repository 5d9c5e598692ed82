#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "okpc/sparse_matrix.hpp"

namespace okpc {

/// Type-erased square linear map x -> y. Cheap to copy; the callable must
/// be reentrant if the operator is shared.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator() = default;
  LinearOperator(std::size_t size, ApplyFn fn) : size_(size), fn_(std::move(fn)) {}

  /// Non-owning view of a matrix; the matrix must outlive the operator.
  static LinearOperator from_matrix(const SparseMatrix& a);
  static LinearOperator identity(std::size_t n);

  std::size_t size() const noexcept { return size_; }
  explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

  void apply(std::span<const double> x, std::span<double> y) const;
  Vector operator()(std::span<const double> x) const;

 private:
  std::size_t size_ = 0;
  ApplyFn fn_;
};

}  // namespace okpc
