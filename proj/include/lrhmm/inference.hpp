#pragma once

#include "lrhmm/forward_backward.hpp"

#include <array>
#include <vector>

namespace lrhmm {

struct ClassDecision {
  int label = 1;
  std::array<double, 2> log_likelihoods{};
  double margin = 0;
};

template <typename Scalar>
struct ViterbiResult {
  std::vector<Index> path;  // zero-based state indices
  Scalar log_prob = 0;
};

namespace detail {

template <typename Scalar>
void check_history(const BasicObservationSequence<Scalar>& seq, const LrHmmModel<Scalar>& m,
                   Index steps) {
  check_scorable(seq, m);
  if (steps < 1) throw UsageError("history must contain at least one step");
  if (steps > seq.length()) throw UsageError("history length exceeds the sequence");
  if (steps > m.n_states) {
    throw UsageError("history of " + std::to_string(steps) +
                     " steps is longer than the model horizon of " + std::to_string(m.n_states));
  }
}

}  // namespace detail

/// log P(x_1..x_T | model) by the forward recursion; T may be shorter than N.
template <typename Scalar>
Scalar log_likelihood(const BasicObservationSequence<Scalar>& seq, const LrHmmModel<Scalar>& m) {
  detail::check_history(seq, m, seq.length());
  const auto emissions = emission_log_table(seq, m, seq.length());
  return terminal_log_likelihood(forward_lattice(emissions, m), seq.length() - 1);
}

/// Log-likelihoods of every prefix of length 1..steps from a single forward pass.
template <typename Scalar>
std::vector<Scalar> prefix_log_likelihoods(const BasicObservationSequence<Scalar>& seq,
                                           const LrHmmModel<Scalar>& m, Index steps) {
  detail::check_history(seq, m, steps);
  const auto alpha = forward_lattice(emission_log_table(seq, m, steps), m);
  std::vector<Scalar> out(static_cast<std::size_t>(steps));
  for (Index t = 0; t < steps; ++t) out[static_cast<std::size_t>(t)] = terminal_log_likelihood(alpha, t);
  return out;
}

/// Argmax rule over two class log-likelihoods; ties go to class 1.
inline ClassDecision decide(double ll1, double ll2) {
  ClassDecision d;
  d.log_likelihoods = {ll1, ll2};
  d.label = ll1 >= ll2 ? 1 : 2;
  d.margin = d.label == 1 ? ll1 - ll2 : ll2 - ll1;
  return d;
}

template <typename Scalar>
ClassDecision classify(const BasicObservationSequence<Scalar>& history, const LrHmmModel<Scalar>& m1,
                       const LrHmmModel<Scalar>& m2) {
  return decide(static_cast<double>(log_likelihood(history, m1)),
                static_cast<double>(log_likelihood(history, m2)));
}

/// Max-plus decoding; every argmax tie resolves to the lower state index.
template <typename Scalar>
ViterbiResult<Scalar> viterbi(const BasicObservationSequence<Scalar>& seq, const LrHmmModel<Scalar>& m) {
  const Index steps = seq.length();
  detail::check_history(seq, m, steps);
  const ReachableBand reach = ReachableBand::of(m);
  const auto emissions = emission_log_table(seq, m, steps);

  RowMatrix<Scalar> delta = RowMatrix<Scalar>::Constant(steps, m.n_states, neg_inf<Scalar>());
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> psi =
      Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(
          steps, m.n_states, -1);
  for (Index j = reach.first; j <= reach.last(0); ++j) delta(0, j) = m.log_pi(j) + emissions(0, j);

  for (Index t = 1; t < steps; ++t) {
    const Index prev_last = reach.last(t - 1);
    for (Index j = reach.first; j <= reach.last(t); ++j) {
      Scalar best = neg_inf<Scalar>();
      Index arg = -1;
      const Index from = std::max(reach.first, j - m.band_width);
      for (Index i = from; i <= std::min(j, prev_last); ++i) {
        const Scalar cand = delta(t - 1, i) + m.log_A(i, j);
        if (arg < 0 || cand > best) {
          best = cand;
          arg = i;
        }
      }
      delta(t, j) = best + emissions(t, j);
      psi(t, j) = arg;
    }
  }

  ViterbiResult<Scalar> result;
  result.path.assign(static_cast<std::size_t>(steps), 0);
  Index end_state = -1;
  Scalar best = neg_inf<Scalar>();
  for (Index j = reach.first; j <= reach.last(steps - 1); ++j) {
    if (end_state < 0 || delta(steps - 1, j) > best) {
      best = delta(steps - 1, j);
      end_state = j;
    }
  }
  if (!std::isfinite(best)) throw ModelInvalidError("no feasible state path for the sequence");
  result.log_prob = best;
  result.path.back() = end_state;
  for (Index t = steps - 1; t > 0; --t) {
    const auto here = static_cast<std::size_t>(t);
    result.path[here - 1] = psi(t, result.path[here]);
  }
  return result;
}

}  // namespace lrhmm
