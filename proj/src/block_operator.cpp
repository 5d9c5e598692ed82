#include "okpc/block_operator.hpp"

#include "okpc/error.hpp"

namespace okpc {

BlockOperator::BlockOperator(const SparseMatrix& mass, const SparseMatrix& stiffness,
                             const SparseMatrix& weighted_mass, double eps, double sigma, double dt)
    : m_(&mass), s_(&stiffness), l_(&weighted_mass), eps_(eps), sigma_(sigma), dt_(dt), p_(mass.rows()) {
  if (stiffness.rows() != p_ || weighted_mass.rows() != p_ || mass.cols() != p_) {
    throw DimensionMismatch("BlockOperator: M, S and L must share one size");
  }
}

void BlockOperator::apply(BlockForm form, std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size()) throw DimensionMismatch("BlockOperator: vector length");
  const auto u = x.subspan(0, p_);
  const auto w = x.subspan(p_, p_);
  Vector mu(p_), su(p_), lu(p_), mw(p_), sw(p_);
  m_->multiply(u, mu);
  s_->multiply(u, su);
  l_->multiply(u, lu);
  m_->multiply(w, mw);
  s_->multiply(w, sw);
  const double e2 = eps_ * eps_;
  if (form == BlockForm::Full) {
    const double c = 1.0 + sigma_ * dt_;
    for (std::size_t i = 0; i < p_; ++i) {
      y[i] = c * mu[i] + dt_ * sw[i];
      y[p_ + i] = -e2 * su[i] - lu[i] + mw[i];
    }
  } else {
    const double z = zeta();
    for (std::size_t i = 0; i < p_; ++i) {
      y[i] = e2 * su[i] + lu[i] - mw[i];
      y[p_ + i] = mu[i] + z * sw[i];
    }
  }
}

LinearOperator BlockOperator::as_operator(BlockForm form) const {
  const BlockOperator self = *this;
  return LinearOperator(size(), [self, form](std::span<const double> x, std::span<double> y) { self.apply(form, x, y); });
}

void BlockOperator::to_saddle(std::span<const double> r, std::span<double> out) const {
  const double c = 1.0 + sigma_ * dt_;
  for (std::size_t i = 0; i < p_; ++i) {
    const double r1 = r[i];
    out[i] = -r[p_ + i];
    out[p_ + i] = r1 / c;
  }
}

void BlockOperator::unscale_rows(std::span<const double> r, std::span<double> out) const {
  const double c = 1.0 + sigma_ * dt_;
  for (std::size_t i = 0; i < p_; ++i) {
    out[i] = r[i] / c;
    out[p_ + i] = r[p_ + i];
  }
}

}  // namespace okpc
