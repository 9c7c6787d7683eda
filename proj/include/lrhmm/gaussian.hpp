#pragma once

#include "lrhmm/errors.hpp"
#include "lrhmm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace lrhmm {

/// Full-covariance Gaussian emission density of one state.
///
/// The Cholesky factor is computed once on construction; a covariance that is
/// not symmetric positive definite is accepted (so that validate_model can
/// report it) but cannot be evaluated.
template <typename Scalar>
class GaussianEmission {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  GaussianEmission() = default;

  GaussianEmission(VectorType mean, MatrixType covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (mean_.size() < 1) throw UsageError("emission mean must have at least one dimension");
    if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
      throw UsageError("emission covariance must be M x M with M = mean size");
    }
    factorize();
  }

  const VectorType& mean() const noexcept { return mean_; }
  const MatrixType& covariance() const noexcept { return covariance_; }
  Index dims() const noexcept { return mean_.size(); }

  bool is_symmetric() const noexcept { return symmetric_; }
  bool is_positive_definite() const noexcept { return spd_; }

  /// -1/2 (M log 2pi + log det covariance); only meaningful when SPD.
  Scalar log_normalizer() const noexcept { return log_normalizer_; }
  const Eigen::LLT<MatrixType>& cholesky() const noexcept { return llt_; }

  VectorType stddev() const { return covariance_.diagonal().cwiseSqrt(); }

 private:
  void factorize() {
    const Scalar scale = std::max(covariance_.cwiseAbs().maxCoeff(), Scalar(1e-300));
    symmetric_ = covariance_.allFinite() &&
                 (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale;
    spd_ = false;
    if (!symmetric_ || !mean_.allFinite()) return;
    llt_.compute(covariance_);
    if (llt_.info() != Eigen::Success) return;
    const auto diag = llt_.matrixLLT().diagonal();
    if ((diag.array() <= Scalar(0)).any() || !diag.allFinite()) return;
    spd_ = true;
    log_normalizer_ =
        -Scalar(0.5) * Scalar(dims()) * log_2pi<Scalar>() - diag.array().log().sum();
  }

  VectorType mean_;
  MatrixType covariance_;
  Eigen::LLT<MatrixType> llt_;
  Scalar log_normalizer_ = 0;
  bool symmetric_ = false;
  bool spd_ = false;
};

template <typename Scalar>
void require_evaluable(const GaussianEmission<Scalar>& g) {
  if (!g.is_positive_definite()) {
    throw ModelInvalidError("emission covariance is not symmetric positive definite");
  }
}

/// log N(x; mean, covariance) through the Cholesky factor.
template <typename Scalar, typename Derived>
Scalar gaussian_log_density(const Eigen::MatrixBase<Derived>& x, const GaussianEmission<Scalar>& g) {
  if (x.size() != g.dims()) throw UsageError("observation dimension does not match emission");
  if (!x.allFinite()) throw UsageError("observation must be finite");
  require_evaluable(g);
  Vector<Scalar> centered(g.dims());
  for (Index i = 0; i < g.dims(); ++i) centered(i) = Scalar(x.derived().coeff(i)) - g.mean()(i);
  g.cholesky().matrixL().solveInPlace(centered);
  return g.log_normalizer() - Scalar(0.5) * centered.squaredNorm();
}

/// Symmetrize and add eps*I with eps = relative_eps * trace/M, at least absolute_floor.
template <typename Scalar>
Matrix<Scalar> regularize_covariance(const Matrix<Scalar>& covariance, Scalar relative_eps,
                                     Scalar absolute_floor = Scalar(1e-9)) {
  const Index dims = covariance.rows();
  Matrix<Scalar> out = Scalar(0.5) * (covariance + covariance.transpose());
  const Scalar eps = std::max(relative_eps * out.trace() / Scalar(dims), absolute_floor);
  out.diagonal().array() += eps;
  return out;
}

}  // namespace lrhmm
