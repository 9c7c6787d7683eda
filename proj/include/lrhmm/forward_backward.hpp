#pragma once

#include "lrhmm/errors.hpp"
#include "lrhmm/gaussian.hpp"
#include "lrhmm/model.hpp"
#include "lrhmm/numeric.hpp"
#include "lrhmm/observation.hpp"

#include <algorithm>

namespace lrhmm {

/// States that can carry probability at step t: [first, last(t)]. Left-right
/// chains never move below the lowest initial state and advance at most
/// band_width states per step.
struct ReachableBand {
  Index first = 0;
  Index first_last = 0;
  Index band_width = 1;
  Index n_states = 0;

  template <typename Scalar>
  static ReachableBand of(const LrHmmModel<Scalar>& m) {
    return {m.first_initial_state(), m.last_initial_state(), m.band_width, m.n_states};
  }

  Index last(Index t) const {
    const Index reach = first_last + t * band_width;
    return std::min(n_states - 1, reach);
  }

  /// First step at which `state` is reachable.
  Index first_step(Index state) const {
    if (state <= first_last) return 0;
    return (state - first_last + band_width - 1) / band_width;
  }
};

/// Log-space lattice quantities of one sequence under one model.
template <typename Scalar>
struct ForwardBackwardCache {
  RowMatrix<Scalar> log_alpha;
  RowMatrix<Scalar> log_beta;
  RowMatrix<Scalar> gamma;
  Matrix<Scalar> log_xi_sums;
  Scalar log_likelihood = 0;
};

/// Throws unless `seq` (first `steps` rows) can be scored by `m`.
template <typename Scalar>
void check_scorable(const BasicObservationSequence<Scalar>& seq, const LrHmmModel<Scalar>& m) {
  if (seq.dims() != m.n_dims) throw UsageError("sequence dimension does not match model");
  if (m.n_states < 1 || static_cast<Index>(m.emissions.size()) != m.n_states ||
      m.log_A.rows() != m.n_states || m.log_A.cols() != m.n_states || m.log_pi.size() != m.n_states) {
    throw ModelInvalidError("model shape is inconsistent");
  }
  if (m.band_width < 1) throw ModelInvalidError("band_width must be >= 1");
  if (m.first_initial_state() >= m.n_states) throw ModelInvalidError("initial distribution is empty");
  for (const auto& g : m.emissions) {
    if (g.dims() != m.n_dims) throw ModelInvalidError("emission dimension does not match model");
    require_evaluable(g);
  }
}

/// Emission log-densities for the first `steps` rows; -inf where a state is
/// unreachable.
template <typename Scalar>
RowMatrix<Scalar> emission_log_table(const BasicObservationSequence<Scalar>& seq,
                                     const LrHmmModel<Scalar>& m, Index steps) {
  const ReachableBand reach = ReachableBand::of(m);
  RowMatrix<Scalar> table = RowMatrix<Scalar>::Constant(steps, m.n_states, neg_inf<Scalar>());
  Matrix<Scalar> centered;
  for (Index j = reach.first; j < m.n_states; ++j) {
    const Index t0 = reach.first_step(j);
    if (t0 >= steps) break;
    const Index count = steps - t0;
    const auto& g = m.emission(j);
    centered = seq.values().middleRows(t0, count).transpose();
    centered.colwise() -= g.mean();
    g.cholesky().matrixL().solveInPlace(centered);
    for (Index c = 0; c < count; ++c) {
      table(t0 + c, j) = g.log_normalizer() - Scalar(0.5) * centered.col(c).squaredNorm();
    }
  }
  return table;
}

/// Forward lattice over the first emissions.rows() steps.
template <typename Scalar>
RowMatrix<Scalar> forward_lattice(const RowMatrix<Scalar>& emissions, const LrHmmModel<Scalar>& m) {
  const ReachableBand reach = ReachableBand::of(m);
  const Index steps = emissions.rows();
  RowMatrix<Scalar> alpha = RowMatrix<Scalar>::Constant(steps, m.n_states, neg_inf<Scalar>());
  for (Index j = reach.first; j <= reach.last(0); ++j) alpha(0, j) = m.log_pi(j) + emissions(0, j);
  for (Index t = 1; t < steps; ++t) {
    const Index prev_last = reach.last(t - 1);
    const Index last = reach.last(t);
    for (Index j = reach.first; j <= last; ++j) {
      Scalar acc = neg_inf<Scalar>();
      const Index from = std::max(reach.first, j - m.band_width);
      const Index to = std::min(j, prev_last);
      for (Index i = from; i <= to; ++i) acc = log_add(acc, alpha(t - 1, i) + m.log_A(i, j));
      alpha(t, j) = acc + emissions(t, j);
    }
  }
  return alpha;
}

template <typename Scalar>
RowMatrix<Scalar> backward_lattice(const RowMatrix<Scalar>& emissions, const LrHmmModel<Scalar>& m) {
  const ReachableBand reach = ReachableBand::of(m);
  const Index steps = emissions.rows();
  RowMatrix<Scalar> beta = RowMatrix<Scalar>::Constant(steps, m.n_states, neg_inf<Scalar>());
  for (Index j = reach.first; j <= reach.last(steps - 1); ++j) beta(steps - 1, j) = 0;
  for (Index t = steps - 2; t >= 0; --t) {
    const Index last = reach.last(t);
    for (Index i = reach.first; i <= last; ++i) {
      Scalar acc = neg_inf<Scalar>();
      const Index to = std::min(i + m.band_width, m.n_states - 1);
      for (Index j = i; j <= to; ++j) {
        acc = log_add(acc, m.log_A(i, j) + emissions(t + 1, j) + beta(t + 1, j));
      }
      beta(t, i) = acc;
    }
  }
  return beta;
}

template <typename Scalar>
Scalar terminal_log_likelihood(const RowMatrix<Scalar>& alpha, Index step) {
  return log_sum_exp(alpha.row(step));
}

/// Full E-step quantities for one sequence. Sequences shorter than the model
/// horizon are allowed.
template <typename Scalar>
ForwardBackwardCache<Scalar> forward_backward(const BasicObservationSequence<Scalar>& seq,
                                              const LrHmmModel<Scalar>& m) {
  check_scorable(seq, m);
  const Index steps = seq.length();
  const Index n = m.n_states;
  const ReachableBand reach = ReachableBand::of(m);
  const RowMatrix<Scalar> emissions = emission_log_table(seq, m, steps);

  ForwardBackwardCache<Scalar> cache;
  cache.log_alpha = forward_lattice(emissions, m);
  cache.log_beta = backward_lattice(emissions, m);
  cache.log_likelihood = terminal_log_likelihood(cache.log_alpha, steps - 1);
  if (!std::isfinite(cache.log_likelihood)) {
    throw ModelInvalidError("sequence has zero likelihood under the model");
  }

  cache.gamma = RowMatrix<Scalar>::Zero(steps, n);
  for (Index t = 0; t < steps; ++t) {
    const Index last = reach.last(t);
    const auto joint =
        (cache.log_alpha.row(t).segment(reach.first, last - reach.first + 1) +
         cache.log_beta.row(t).segment(reach.first, last - reach.first + 1))
            .eval();
    const Scalar norm = log_sum_exp(joint);
    for (Index j = 0; j < joint.size(); ++j) cache.gamma(t, reach.first + j) = exp_or_zero(joint(j) - norm);
  }

  // Summed pairwise posteriors, accumulated per transition with a max shift.
  cache.log_xi_sums = Matrix<Scalar>::Constant(n, n, neg_inf<Scalar>());
  Vector<Scalar> terms;
  for (Index i = reach.first; i < n; ++i) {
    const Index t0 = reach.first_step(i);
    if (t0 > steps - 2) break;
    const Index to = std::min(i + m.band_width, n - 1);
    for (Index j = i; j <= to; ++j) {
      const Scalar log_a = m.log_A(i, j);
      if (log_a == neg_inf<Scalar>()) continue;
      const Index count = steps - 1 - t0;
      terms = cache.log_alpha.col(i).segment(t0, count) + emissions.col(j).segment(t0 + 1, count) +
              cache.log_beta.col(j).segment(t0 + 1, count);
      terms.array() += log_a - cache.log_likelihood;
      const Scalar peak = terms.maxCoeff();
      if (peak == neg_inf<Scalar>()) continue;
      Scalar acc = 0;
      for (Index k = 0; k < count; ++k) acc += exp_or_zero(terms(k) - peak);
      cache.log_xi_sums(i, j) = peak + std::log(acc);
    }
  }
  return cache;
}

}  // namespace lrhmm
