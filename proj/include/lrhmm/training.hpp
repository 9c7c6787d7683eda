#pragma once

#include "lrhmm/forward_backward.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace lrhmm {

struct TrainingConfig {
  int max_iterations = 100;
  double loglik_rel_tolerance = 1e-6;
  // Relative covariance regularization: eps = covariance_floor_eps * trace / M.
  double covariance_floor_eps = 1e-6;
  // Lower bound on eps, in squared data units.
  double covariance_floor = 1e-9;
  std::uint64_t rng_seed = 0;
  Index band_width = 1;

  void validate() const {
    if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
    if (!(loglik_rel_tolerance > 0)) throw UsageError("loglik_rel_tolerance must be > 0");
    if (!(covariance_floor_eps > 0)) throw UsageError("covariance_floor_eps must be > 0");
    if (!(covariance_floor > 0) || !std::isfinite(covariance_floor)) {
      throw UsageError("covariance_floor must be finite and > 0");
    }
    if (band_width < 1) throw UsageError("band_width must be >= 1");
  }
};

template <typename Scalar>
struct TrainingTrace {
  std::vector<Scalar> log_likelihoods;
  int iterations_run = 0;
  bool converged = false;
};

template <typename Scalar>
struct TrainingResult {
  LrHmmModel<Scalar> model;
  TrainingTrace<Scalar> trace;
};

inline constexpr double kDegenerateStateMass = 1e-12;

/// Order in which training sequences are accumulated: by trial id, then by
/// content, so that permuting the input never changes the result.
template <typename Scalar>
std::vector<std::size_t> canonical_order(std::span<const BasicObservationSequence<Scalar>> seqs) {
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto less = [&](std::size_t a, std::size_t b) {
    const auto& x = seqs[a];
    const auto& y = seqs[b];
    if (x.trial_id() != y.trial_id()) return x.trial_id() < y.trial_id();
    if (x.label() != y.label()) return x.label() < y.label();
    if (x.sensor_id() != y.sensor_id()) return x.sensor_id() < y.sensor_id();
    if (x.length() != y.length()) return x.length() < y.length();
    if (x.dims() != y.dims()) return x.dims() < y.dims();
    const auto& xv = x.values();
    const auto& yv = y.values();
    for (Index i = 0; i < xv.size(); ++i) {
      if (xv.data()[i] != yv.data()[i]) return xv.data()[i] < yv.data()[i];
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  return order;
}

namespace detail {

struct TrainingShape {
  Index steps;
  Index dims;
};

template <typename Scalar>
TrainingShape check_training_set(std::span<const BasicObservationSequence<Scalar>> seqs) {
  if (seqs.empty()) throw UsageError("training needs at least one sequence");
  const Index steps = seqs.front().length();
  const Index dims = seqs.front().dims();
  for (const auto& s : seqs) {
    if (s.length() != steps) throw UsageError("training sequences must share the same length T");
    if (s.dims() != dims) throw UsageError("training sequences must share the same dimension M");
  }
  return {steps, dims};
}

}  // namespace detail

/// Canonical starting point: N = T states, point mass on state 0, uniform
/// in-band transitions, per-step emission moments with a small seeded
/// perturbation of the means.
template <typename Scalar>
LrHmmModel<Scalar> initialize_model(std::span<const BasicObservationSequence<Scalar>> seqs,
                                    const TrainingConfig& config) {
  config.validate();
  const auto shape = detail::check_training_set(seqs);
  const auto order = canonical_order(seqs);
  const Index n = shape.steps;
  const Index dims = shape.dims;
  const Scalar count = Scalar(seqs.size());

  RowMatrix<Scalar> mean = RowMatrix<Scalar>::Zero(n, dims);
  for (auto k : order) mean += seqs[k].values();
  mean /= count;
  RowMatrix<Scalar> var = RowMatrix<Scalar>::Zero(n, dims);
  for (auto k : order) var.array() += (seqs[k].values() - mean).array().square();
  var /= count;

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  LrHmmModel<Scalar> m;
  m.n_states = n;
  m.n_dims = dims;
  m.band_width = config.band_width;
  m.log_pi = canonical_log_pi<Scalar>(n);
  m.log_A = uniform_band_log_transitions<Scalar>(n, config.band_width);
  m.emissions.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    Vector<Scalar> mu = mean.row(j).transpose();
    for (Index c = 0; c < dims; ++c) {
      mu(c) += Scalar(0.01) * std::sqrt(var(j, c)) * Scalar(normal(rng));
    }
    Matrix<Scalar> cov = var.row(j).transpose().asDiagonal();
    m.emissions.emplace_back(std::move(mu),
                             regularize_covariance(cov, Scalar(config.covariance_floor_eps), Scalar(config.covariance_floor)));
  }
  return m;
}

namespace detail {

template <typename Scalar>
struct EStepResult {
  Scalar total_log_likelihood = 0;
  Vector<Scalar> initial_mass;
  Matrix<Scalar> log_xi_total;
  std::vector<RowMatrix<Scalar>> gammas;
};

template <typename Scalar>
EStepResult<Scalar> expectation(std::span<const BasicObservationSequence<Scalar>> seqs,
                                const std::vector<std::size_t>& order, const LrHmmModel<Scalar>& m) {
  EStepResult<Scalar> e;
  const Index n = m.n_states;
  e.initial_mass = Vector<Scalar>::Zero(n);
  e.log_xi_total = Matrix<Scalar>::Constant(n, n, neg_inf<Scalar>());
  e.gammas.reserve(order.size());
  for (auto k : order) {
    auto cache = forward_backward(seqs[k], m);
    e.total_log_likelihood += cache.log_likelihood;
    e.initial_mass += cache.gamma.row(0).transpose();
    for (Index i = 0; i < n; ++i) {
      const Index to = std::min(i + m.band_width, n - 1);
      for (Index j = i; j <= to; ++j) {
        e.log_xi_total(i, j) = log_add(e.log_xi_total(i, j), cache.log_xi_sums(i, j));
      }
    }
    e.gammas.push_back(std::move(cache.gamma));
  }
  return e;
}

template <typename Scalar>
LrHmmModel<Scalar> maximization(std::span<const BasicObservationSequence<Scalar>> seqs,
                                const std::vector<std::size_t>& order, const LrHmmModel<Scalar>& prev,
                                const EStepResult<Scalar>& e, const TrainingConfig& config) {
  const Index n = prev.n_states;
  const Index dims = prev.n_dims;
  LrHmmModel<Scalar> m;
  m.n_states = n;
  m.n_dims = dims;
  m.band_width = prev.band_width;

  m.log_pi = (e.initial_mass / Scalar(order.size())).array().log();

  m.log_A = Matrix<Scalar>::Constant(n, n, neg_inf<Scalar>());
  for (Index i = 0; i < n; ++i) {
    const Scalar denom = log_sum_exp(e.log_xi_total.row(i));
    if (denom == neg_inf<Scalar>()) {
      // No transition out of i was ever observed (e.g. the final state).
      m.log_A.row(i) = prev.log_A.row(i);
      continue;
    }
    for (Index j = 0; j < n; ++j) {
      const Scalar v = e.log_xi_total(i, j);
      m.log_A(i, j) = v == neg_inf<Scalar>() ? v : v - denom;
    }
  }

  Vector<Scalar> weight = Vector<Scalar>::Zero(n);
  Matrix<Scalar> weighted_sum = Matrix<Scalar>::Zero(n, dims);
  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto& gamma = e.gammas[s];
    weight += gamma.colwise().sum().transpose();
    weighted_sum.noalias() += gamma.transpose() * seqs[order[s]].values();
  }
  for (Index j = 0; j < n; ++j) {
    if (!(weight(j) >= Scalar(kDegenerateStateMass))) {
      throw DegenerateStateError(static_cast<std::size_t>(j), static_cast<double>(weight(j)));
    }
  }
  const Matrix<Scalar> means = weighted_sum.array().colwise() / weight.array();

  const ReachableBand reach = ReachableBand::of(prev);
  std::vector<Matrix<Scalar>> scatter(static_cast<std::size_t>(n), Matrix<Scalar>::Zero(dims, dims));
  RowMatrix<Scalar> centered;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto& gamma = e.gammas[s];
    const auto& x = seqs[order[s]].values();
    const Index steps = x.rows();
    for (Index j = 0; j < n; ++j) {
      const Index t0 = std::min(reach.first_step(j), steps);
      if (t0 >= steps) continue;
      centered = x.bottomRows(steps - t0).rowwise() - means.row(j);
      const auto w = gamma.col(j).tail(steps - t0);
      scatter[static_cast<std::size_t>(j)].noalias() +=
          centered.transpose() * w.asDiagonal() * centered;
    }
  }

  m.emissions.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    Matrix<Scalar> cov = scatter[static_cast<std::size_t>(j)] / weight(j);
    m.emissions.emplace_back(means.row(j).transpose(),
                             regularize_covariance(cov, Scalar(config.covariance_floor_eps), Scalar(config.covariance_floor)));
  }
  return m;
}

}  // namespace detail

/// Baum-Welch from an explicit starting model.
template <typename Scalar>
TrainingResult<Scalar> baum_welch(std::span<const BasicObservationSequence<Scalar>> seqs,
                                  LrHmmModel<Scalar> start, const TrainingConfig& config) {
  config.validate();
  const auto shape = detail::check_training_set(seqs);
  if (start.n_states != shape.steps) {
    throw UsageError("training requires N equal to the sequence length T");
  }
  if (start.n_dims != shape.dims) throw UsageError("sequence dimension does not match model");
  require_valid(start);
  const auto order = canonical_order(seqs);

  TrainingResult<Scalar> result;
  auto& trace = result.trace;
  LrHmmModel<Scalar> model = std::move(start);
  for (int it = 0; it < config.max_iterations; ++it) {
    const auto e = detail::expectation(seqs, order, model);
    trace.log_likelihoods.push_back(e.total_log_likelihood);
    trace.iterations_run = it + 1;
    if (it > 0) {
      const Scalar previous = trace.log_likelihoods[trace.log_likelihoods.size() - 2];
      const Scalar change = std::abs(e.total_log_likelihood - previous);
      if (change < Scalar(config.loglik_rel_tolerance) * std::abs(previous)) {
        trace.converged = true;
        break;
      }
    }
    model = detail::maximization(seqs, order, model, e, config);
  }
  result.model = std::move(model);
  return result;
}

template <typename Scalar>
TrainingResult<Scalar> baum_welch(std::span<const BasicObservationSequence<Scalar>> seqs,
                                  const TrainingConfig& config) {
  return baum_welch(seqs, initialize_model(seqs, config), config);
}

template <typename Scalar>
TrainingResult<Scalar> baum_welch(const std::vector<BasicObservationSequence<Scalar>>& seqs,
                                  const TrainingConfig& config) {
  return baum_welch(std::span<const BasicObservationSequence<Scalar>>(seqs), config);
}

template <typename Scalar>
LrHmmModel<Scalar> initialize_model(const std::vector<BasicObservationSequence<Scalar>>& seqs,
                                    const TrainingConfig& config) {
  return initialize_model(std::span<const BasicObservationSequence<Scalar>>(seqs), config);
}

}  // namespace lrhmm
