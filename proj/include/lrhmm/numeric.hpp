#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace lrhmm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Time-indexed tables (observations, lattices) are stored one time step per
// contiguous row.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

template <typename Scalar>
constexpr Scalar neg_inf() {
  return -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
Scalar log_2pi() {
  return std::log(Scalar(2) * Scalar(EIGEN_PI));
}

/// log(exp(a) + exp(b)), exact for -inf operands.
/// Below this argument std::exp returns exactly zero.
template <typename Scalar>
constexpr Scalar exp_underflow() {
  return Scalar(std::numeric_limits<Scalar>::min_exponent - std::numeric_limits<Scalar>::digits - 1) *
         Scalar(0.6931471805599453);
}

/// std::exp without the underflow slow path.
template <typename Scalar>
inline Scalar exp_or_zero(Scalar x) {
  return x > exp_underflow<Scalar>() ? std::exp(x) : Scalar(0);
}

template <typename Scalar>
inline Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  const Scalar d = b - a;
  if (!(d > exp_underflow<Scalar>())) return a;
  return a + std::log1p(std::exp(d));
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) return neg_inf<Scalar>();
  const Scalar peak = values.maxCoeff();
  if (peak == neg_inf<Scalar>()) return peak;
  if (!std::isfinite(peak)) return peak;
  Scalar acc = 0;
  for (Index i = 0; i < values.size(); ++i) {
    acc += exp_or_zero(values.derived().coeff(i) - peak);
  }
  return peak + std::log(acc);
}

}  // namespace lrhmm
