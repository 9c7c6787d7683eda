#pragma once

#include "lrhmm/errors.hpp"
#include "lrhmm/numeric.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace lrhmm {

/// One recorded or synthesized trial: T time steps by M channels.
template <typename Scalar>
class BasicObservationSequence {
 public:
  using Values = RowMatrix<Scalar>;

  BasicObservationSequence() = default;

  BasicObservationSequence(Values values, Scalar dt, std::optional<int> label = std::nullopt,
                           std::string sensor_id = {}, std::int64_t trial_id = 0)
      : values_(std::move(values)),
        dt_(dt),
        label_(label),
        sensor_id_(std::move(sensor_id)),
        trial_id_(trial_id) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw UsageError("observation sequence needs T >= 1 and M >= 1");
    }
    if (!values_.allFinite()) throw UsageError("observation sequence contains non-finite values");
    if (!(dt_ > 0)) throw UsageError("sampling interval dt must be positive");
    if (label_ && *label_ != 1 && *label_ != 2) throw UsageError("class label must be 1 or 2");
  }

  const Values& values() const noexcept { return values_; }
  Index length() const noexcept { return values_.rows(); }
  Index dims() const noexcept { return values_.cols(); }
  Scalar dt() const noexcept { return dt_; }
  const std::optional<int>& label() const noexcept { return label_; }
  const std::string& sensor_id() const noexcept { return sensor_id_; }
  std::int64_t trial_id() const noexcept { return trial_id_; }

  auto step(Index t) const { return values_.row(t); }

  /// The first `steps` time steps as a new sequence with the same metadata.
  BasicObservationSequence head(Index steps) const {
    if (steps < 1 || steps > length()) throw UsageError("history length out of range");
    return BasicObservationSequence(values_.topRows(steps), dt_, label_, sensor_id_, trial_id_);
  }

  /// Steps [first, length) as a new sequence.
  BasicObservationSequence tail_from(Index first) const {
    if (first < 0 || first >= length()) throw UsageError("tail start out of range");
    return BasicObservationSequence(values_.bottomRows(length() - first), dt_, label_, sensor_id_,
                                    trial_id_);
  }

 private:
  Values values_;
  Scalar dt_ = 1;
  std::optional<int> label_;
  std::string sensor_id_;
  std::int64_t trial_id_ = 0;
};

using ObservationSequence = BasicObservationSequence<double>;

}  // namespace lrhmm
