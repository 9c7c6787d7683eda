#pragma once

#include "lrhmm/inference.hpp"

#include <span>
#include <string>

namespace lrhmm {

/// ll_ab = sum over the sequences of set a of log P(O | model b).
struct CrossFitnessReport {
  double ll_11 = 0;
  double ll_22 = 0;
  double ll_12 = 0;
  double ll_21 = 0;
  double distance = 0;
};

namespace detail {

template <typename Scalar>
double summed_log_likelihood(std::span<const BasicObservationSequence<Scalar>> set,
                             const LrHmmModel<Scalar>& m, int set_index) {
  double total = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const std::string where = "set " + std::to_string(set_index) + ", trial " +
                              std::to_string(set[k].trial_id()) + " (position " + std::to_string(k) + "): ";
    try {
      total += static_cast<double>(log_likelihood(set[k], m));
    } catch (const UsageError& err) {
      throw UsageError(where + err.what());
    } catch (const ModelInvalidError& err) {
      throw ModelInvalidError(where + err.what());
    } catch (const DataError& err) {
      throw DataError(where + err.what());
    }
  }
  return total;
}

}  // namespace detail

/// D = ll_11 + ll_22 - ll_12 - ll_21. Evaluated as (ll_11 + ll_22) - (ll_12 + ll_21)
/// so that swapping the two (set, model) pairs gives a bit-identical result.
template <typename Scalar>
CrossFitnessReport cross_fitness_distance(std::span<const BasicObservationSequence<Scalar>> set1,
                                          std::span<const BasicObservationSequence<Scalar>> set2,
                                          const LrHmmModel<Scalar>& m1, const LrHmmModel<Scalar>& m2) {
  if (set1.empty() || set2.empty()) throw UsageError("cross-fitness distance needs two non-empty sets");
  CrossFitnessReport r;
  r.ll_11 = detail::summed_log_likelihood(set1, m1, 1);
  r.ll_22 = detail::summed_log_likelihood(set2, m2, 2);
  r.ll_12 = detail::summed_log_likelihood(set1, m2, 1);
  r.ll_21 = detail::summed_log_likelihood(set2, m1, 2);
  r.distance = (r.ll_11 + r.ll_22) - (r.ll_12 + r.ll_21);
  return r;
}

template <typename Scalar>
CrossFitnessReport cross_fitness_distance(const std::vector<BasicObservationSequence<Scalar>>& set1,
                                          const std::vector<BasicObservationSequence<Scalar>>& set2,
                                          const LrHmmModel<Scalar>& m1, const LrHmmModel<Scalar>& m2) {
  return cross_fitness_distance(std::span<const BasicObservationSequence<Scalar>>(set1),
                                std::span<const BasicObservationSequence<Scalar>>(set2), m1, m2);
}

}  // namespace lrhmm
