#pragma once

#include "lrhmm/inference.hpp"

#include <ostream>
#include <vector>

namespace lrhmm {

/// Per-step forecast (mean, standard deviation) for steps split_index..N-1,
/// read off the emissions along the most likely state path.
template <typename Scalar>
struct ProbabilisticTrajectory {
  Index split_index = 0;
  RowMatrix<Scalar> means;
  RowMatrix<Scalar> stddevs;
  int class_label = 1;
  std::vector<Index> state_path;  // full length N, zero-based
};

/// Extends a decoded prefix to the model horizon by taking, from each state,
/// the in-band successor with the largest transition probability (ties to the
/// lower index).
template <typename Scalar>
std::vector<Index> extend_state_path(std::vector<Index> prefix, const LrHmmModel<Scalar>& m) {
  if (prefix.empty()) throw UsageError("cannot extend an empty state path");
  while (static_cast<Index>(prefix.size()) < m.n_states) {
    const Index s = prefix.back();
    const Index to = std::min(s + m.band_width, m.n_states - 1);
    Index next = s;
    for (Index j = s + 1; j <= to; ++j) {
      if (m.log_A(s, j) > m.log_A(s, next)) next = j;
    }
    prefix.push_back(next);
  }
  return prefix;
}

template <typename Scalar>
ProbabilisticTrajectory<Scalar> trajectory_from_path(const LrHmmModel<Scalar>& m,
                                                     std::vector<Index> path, Index split_index,
                                                     int class_label) {
  const Index n = m.n_states;
  if (split_index < 1 || split_index >= n) throw NothingToForecastError("split index leaves no future steps");
  if (static_cast<Index>(path.size()) != n) throw UsageError("state path must cover the model horizon");
  ProbabilisticTrajectory<Scalar> pt;
  pt.split_index = split_index;
  pt.class_label = class_label;
  pt.means.resize(n - split_index, m.n_dims);
  pt.stddevs.resize(n - split_index, m.n_dims);
  for (Index r = 0; r < n - split_index; ++r) {
    const auto& g = m.emission(path[static_cast<std::size_t>(split_index + r)]);
    pt.means.row(r) = g.mean().transpose();
    pt.stddevs.row(r) = g.stddev().transpose();
  }
  pt.state_path = std::move(path);
  return pt;
}

/// Classify the history, decode it under the winning model, extend the path
/// greedily and emit the future emission moments.
template <typename Scalar>
ProbabilisticTrajectory<Scalar> forecast(const BasicObservationSequence<Scalar>& history,
                                         const LrHmmModel<Scalar>& m1, const LrHmmModel<Scalar>& m2) {
  if (m1.n_states != m2.n_states || m1.n_dims != m2.n_dims || m1.band_width != m2.band_width) {
    throw UsageError("forecast models must share N, M and band_width");
  }
  if (history.length() >= m1.n_states) {
    throw NothingToForecastError("history covers the whole model horizon; nothing to forecast");
  }
  const ClassDecision decision = classify(history, m1, m2);
  const auto& winner = decision.label == 1 ? m1 : m2;
  auto decoded = viterbi(history, winner);
  return trajectory_from_path(winner, extend_state_path(std::move(decoded.path), winner),
                              history.length(), decision.label);
}

struct ForecastRow {
  double time_s;
  Index channel;
  double mean;
  double lower;
  double upper;
  int class_label;
};

template <typename Scalar>
std::vector<ForecastRow> export_forecast(const ProbabilisticTrajectory<Scalar>& pt, double dt) {
  std::vector<ForecastRow> rows;
  rows.reserve(static_cast<std::size_t>(pt.means.size()));
  for (Index r = 0; r < pt.means.rows(); ++r) {
    for (Index c = 0; c < pt.means.cols(); ++c) {
      const double mean = static_cast<double>(pt.means(r, c));
      const double sd = static_cast<double>(pt.stddevs(r, c));
      rows.push_back({static_cast<double>(pt.split_index + r) * dt, c, mean, mean - sd, mean + sd,
                      pt.class_label});
    }
  }
  return rows;
}

/// Writes `time_s,channel,mean,lower,upper,class`.
void write_forecast_csv(std::ostream& out, const std::vector<ForecastRow>& rows);

struct Coverage {
  std::size_t covered = 0;
  std::size_t total = 0;
  double fraction() const { return total ? double(covered) / double(total) : 0.0; }
};

/// How many true future points fall inside mean +/- 1 s.d.
template <typename Scalar>
Coverage forecast_coverage(const ProbabilisticTrajectory<Scalar>& pt,
                           const BasicObservationSequence<Scalar>& full_truth) {
  if (full_truth.length() < pt.split_index + pt.means.rows() || full_truth.dims() != pt.means.cols()) {
    throw UsageError("truth sequence does not cover the forecast");
  }
  Coverage cov;
  for (Index r = 0; r < pt.means.rows(); ++r) {
    for (Index c = 0; c < pt.means.cols(); ++c) {
      const Scalar x = full_truth.values()(pt.split_index + r, c);
      cov.covered += std::abs(x - pt.means(r, c)) <= pt.stddevs(r, c) ? 1 : 0;
      ++cov.total;
    }
  }
  return cov;
}

}  // namespace lrhmm
