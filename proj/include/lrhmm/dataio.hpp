#pragma once

#include "lrhmm/observation.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lrhmm {

// ---------------------------------------------------------------------------
// Sequence CSV
//
//   t,<sensor>_c0[,<sensor>_c1,...]
//   # trial_id=<int>
//   # label=<1|2>
//   # dt=<seconds>
//   <t>,<v0>[,<v1>,...]
//
// One file per trial. Comment lines may appear anywhere; numbers are written
// in shortest round-trip form.
// ---------------------------------------------------------------------------

void write_sequence_csv(std::ostream& out, const ObservationSequence& seq);
void save_csv(const std::filesystem::path& path, const ObservationSequence& seq);

ObservationSequence parse_sequence_csv(std::istream& in, const std::string& source_name);

/// A file yields one sequence; a directory yields every *.csv inside it,
/// sorted by file name.
std::vector<ObservationSequence> load_csv(const std::filesystem::path& path);

/// Sequences grouped by sensor: one subdirectory per sensor under `root`.
std::map<std::string, std::vector<ObservationSequence>> load_dataset(const std::filesystem::path& root);

/// `<root>/<sensor_id>/class<label>_trial<id>.csv`
std::filesystem::path dataset_file_path(const std::filesystem::path& root, const ObservationSequence& seq);

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Rotation s in [0, len(x)) maximizing the mean-removed circular
/// cross-correlation sum_t ref(t) * x((t + s) mod len(x)); ties keep the
/// smallest s.
Index best_circular_shift(const Vector<double>& reference, const Vector<double>& x);

/// Shift of every sequence's first channel against the first sequence.
std::vector<Index> alignment_shifts(std::span<const ObservationSequence> seqs);

/// Rotates each sequence left by its shift, then truncates all to the
/// shortest length.
std::vector<ObservationSequence> apply_alignment(std::span<const ObservationSequence> seqs,
                                                 std::span<const Index> shifts);

/// Keeps `channels`, divides them by `scale_divisor` and optionally aligns.
std::vector<ObservationSequence> preprocess(std::span<const ObservationSequence> seqs,
                                            double scale_divisor, const std::vector<Index>& channels,
                                            bool align);

// ---------------------------------------------------------------------------
// Synthetic rigid / fabric sensor data
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  double omega = 1.05 * EIGEN_PI;  // rad/s
  double amplitude = 100.0;
  // Gain on the artifact term: a * artifact_amplitude * amplitude * cos(...).
  double artifact_amplitude = 1.0;
  double artifact_phase_lag = 0.0;  // radians, relative to the rigid motion
  double noise_std = 0.0;
  double duration_s = 5.0;
  double dt = 0.025;
  int n_sequences = 30;
  std::uint64_t rng_seed = 0;
  bool random_start_phase = true;
  int label = 1;

  void validate() const;
  Index steps() const;
};

struct SensorSeries {
  std::string sensor_id;
  double artifact_level = 0.0;
  std::vector<ObservationSequence> sequences;
};

/// The rigid sensor ("dr1") followed by one fabric sensor per artifact level
/// ("df2", "df3", ...). Trial k draws from an engine seeded with
/// rng_seed ^ k: start phase first, then rigid noise, then each level's noise.
std::vector<SensorSeries> generate_synthetic(const SyntheticConfig& config,
                                             const std::vector<double>& artifact_levels);

std::string fabric_sensor_id(std::size_t level_index);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

}  // namespace lrhmm
