#pragma once

#include "lrhmm/gaussian.hpp"
#include "lrhmm/numeric.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace lrhmm {

/// Left-right HMM with one Gaussian emission per state. All probabilities are
/// held as logs; structural zeros are -inf.
template <typename Scalar>
struct LrHmmModel {
  Index n_states = 0;
  Index n_dims = 0;
  Index band_width = 1;
  Vector<Scalar> log_pi;
  Matrix<Scalar> log_A;
  std::vector<GaussianEmission<Scalar>> emissions;

  const GaussianEmission<Scalar>& emission(Index state) const {
    return emissions[static_cast<std::size_t>(state)];
  }

  /// Highest state with a finite initial probability (or -1 when none).
  Index last_initial_state() const {
    for (Index i = n_states - 1; i >= 0; --i) {
      if (log_pi(i) != neg_inf<Scalar>()) return i;
    }
    return -1;
  }

  Index first_initial_state() const {
    for (Index i = 0; i < n_states; ++i) {
      if (log_pi(i) != neg_inf<Scalar>()) return i;
    }
    return n_states;
  }
};

/// Point mass on the first state.
template <typename Scalar>
Vector<Scalar> canonical_log_pi(Index n_states) {
  Vector<Scalar> log_pi = Vector<Scalar>::Constant(n_states, neg_inf<Scalar>());
  log_pi(0) = 0;
  return log_pi;
}

/// Uniform transitions over {i, ..., min(i + band_width, N - 1)}; the final
/// state is absorbing.
template <typename Scalar>
Matrix<Scalar> uniform_band_log_transitions(Index n_states, Index band_width) {
  Matrix<Scalar> log_A = Matrix<Scalar>::Constant(n_states, n_states, neg_inf<Scalar>());
  for (Index i = 0; i < n_states; ++i) {
    const Index last = std::min(i + band_width, n_states - 1);
    const Scalar logp = -std::log(Scalar(last - i + 1));
    for (Index j = i; j <= last; ++j) log_A(i, j) = logp;
  }
  return log_A;
}

enum class ViolationKind {
  Shape,
  BandWidth,
  InitialDistribution,
  Stochasticity,
  Structure,
  EmissionShape,
  CovarianceAsymmetric,
  CovarianceNotPositiveDefinite,
  NonFinite,
};

struct ModelViolation {
  ViolationKind kind;
  std::string detail;
};

inline const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Shape: return "shape";
    case ViolationKind::BandWidth: return "band_width";
    case ViolationKind::InitialDistribution: return "initial_distribution";
    case ViolationKind::Stochasticity: return "stochasticity";
    case ViolationKind::Structure: return "structure";
    case ViolationKind::EmissionShape: return "emission_shape";
    case ViolationKind::CovarianceAsymmetric: return "covariance_asymmetric";
    case ViolationKind::CovarianceNotPositiveDefinite: return "covariance_not_positive_definite";
    case ViolationKind::NonFinite: return "non_finite";
  }
  return "unknown";
}

namespace detail {

inline std::string join_indices(const std::vector<Index>& indices) {
  std::ostringstream out;
  for (std::size_t i = 0; i < indices.size(); ++i) out << (i ? "," : "") << indices[i];
  return out.str();
}

}  // namespace detail

/// Checks every model invariant; one entry per violated invariant, never throws.
template <typename Scalar>
std::vector<ModelViolation> validate_model(const LrHmmModel<Scalar>& m) {
  std::vector<ModelViolation> out;
  const Index n = m.n_states;
  if (n < 1 || m.n_dims < 1 || m.log_pi.size() != n || m.log_A.rows() != n || m.log_A.cols() != n ||
      static_cast<Index>(m.emissions.size()) != n) {
    out.push_back({ViolationKind::Shape, "state/dimension counts disagree"});
    return out;
  }
  if (m.band_width < 1) out.push_back({ViolationKind::BandWidth, "band_width must be >= 1"});

  const auto is_nan_or_pos_inf = [](Scalar v) {
    return std::isnan(v) || v == std::numeric_limits<Scalar>::infinity();
  };
  bool bad_values = false;
  for (Index i = 0; i < n; ++i) {
    bad_values |= is_nan_or_pos_inf(m.log_pi(i));
    for (Index j = 0; j < n; ++j) bad_values |= is_nan_or_pos_inf(m.log_A(i, j));
  }
  if (bad_values) {
    out.push_back({ViolationKind::NonFinite, "log probabilities contain NaN or +inf"});
    return out;
  }

  const Scalar pi_sum = m.log_pi.unaryExpr([](Scalar v) { return std::exp(v); }).sum();
  if (std::abs(pi_sum - Scalar(1)) > Scalar(1e-9)) {
    out.push_back({ViolationKind::InitialDistribution,
                   "initial probabilities sum to " + std::to_string(pi_sum)});
  }

  std::vector<Index> bad_rows;
  std::vector<Index> structure_rows;
  for (Index i = 0; i < n; ++i) {
    const Scalar row_sum = m.log_A.row(i).unaryExpr([](Scalar v) { return std::exp(v); }).sum();
    if (std::abs(row_sum - Scalar(1)) > Scalar(1e-9)) bad_rows.push_back(i);
    for (Index j = 0; j < n; ++j) {
      const bool in_band = j >= i && j <= i + m.band_width;
      if (!in_band && m.log_A(i, j) != neg_inf<Scalar>()) {
        structure_rows.push_back(i);
        break;
      }
    }
  }
  if (!bad_rows.empty()) {
    out.push_back({ViolationKind::Stochasticity,
                   "transition rows not summing to 1: " + detail::join_indices(bad_rows)});
  }
  if (!structure_rows.empty()) {
    out.push_back({ViolationKind::Structure,
                   "transitions outside the left-right band in rows: " +
                       detail::join_indices(structure_rows)});
  }

  std::vector<Index> shape_bad, asym, not_pd;
  for (Index s = 0; s < n; ++s) {
    const auto& g = m.emission(s);
    if (g.dims() != m.n_dims || !g.mean().allFinite()) {
      shape_bad.push_back(s);
      continue;
    }
    if (!g.is_symmetric()) {
      asym.push_back(s);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(g.covariance(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > Scalar(0)) ||
        !g.is_positive_definite()) {
      not_pd.push_back(s);
    }
  }
  if (!shape_bad.empty()) {
    out.push_back({ViolationKind::EmissionShape,
                   "emission dimension mismatch or non-finite mean in states: " +
                       detail::join_indices(shape_bad)});
  }
  if (!asym.empty()) {
    out.push_back({ViolationKind::CovarianceAsymmetric,
                   "asymmetric covariance in states: " + detail::join_indices(asym)});
  }
  if (!not_pd.empty()) {
    out.push_back({ViolationKind::CovarianceNotPositiveDefinite,
                   "covariance not positive definite in states: " + detail::join_indices(not_pd)});
  }
  return out;
}

template <typename Scalar>
void require_valid(const LrHmmModel<Scalar>& m) {
  const auto violations = validate_model(m);
  if (violations.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& v : violations) msg += std::string(" [") + to_string(v.kind) + "] " + v.detail + ";";
  throw ModelInvalidError(msg);
}

}  // namespace lrhmm
