#pragma once

#include "lrhmm/dataio.hpp"
#include "lrhmm/forecast.hpp"
#include "lrhmm/training.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lrhmm {

struct ExperimentConfig {
  int n_repetitions = 100;
  std::vector<double> history_durations;  // seconds
  double history_s = 0.5;                 // forecast split
  std::uint64_t rng_seed = 0;

  // Either a dataset directory (one subdirectory per sensor) or the
  // synthetic class pair below.
  std::filesystem::path data_dir;
  std::array<SyntheticConfig, 2> synthetic{};
  std::vector<double> artifact_levels{0.3, 0.6, 1.0};
  bool include_rigid = true;

  double scale_divisor = 100.0;
  std::vector<Index> channels{0};
  bool align = true;
  std::string reference_sensor = "dr1";
  std::string motion_type = "simple_harmonic";

  TrainingConfig training{};
  int workers = 1;
  int max_resamples = 20;

  void validate() const;
};

/// Defaults: two frequencies, 30 trials of
/// 5 s at 40 Hz per class, readings in millimetres (divided by 100).
ExperimentConfig default_experiment_config();

/// Applies `key=value` lines (blank lines and '#' comments ignored) on top of
/// `base`. Unknown keys raise UsageError.
ExperimentConfig parse_experiment_config(std::istream& in, ExperimentConfig base);
ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// "start:stop:step" (inclusive) or a comma-separated list.
std::vector<double> parse_durations(const std::string& text);

struct SensorData {
  std::string sensor_id;
  double artifact_level = 0.0;
  std::array<std::vector<ObservationSequence>, 2> classes;  // label 1, label 2
};

/// Loads or synthesizes the data set and applies scaling, channel selection
/// and time alignment (shifts estimated on the reference sensor and applied
/// to every sensor of the same trial).
std::vector<SensorData> prepare_experiment_data(const ExperimentConfig& cfg);

/// Seeds: data for class c uses derive_seed(rng_seed, 0xDA7A0 + c);
/// repetition r uses rng_seed ^ r.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct AccuracyPoint {
  std::string sensor_id;
  double duration_s = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? double(correct) / double(total) : 0.0; }
};

struct AccuracyCurve {
  std::vector<AccuracyPoint> points;             // sensor-major, durations ascending
  std::map<std::string, std::size_t> resampled;  // failed trainings replaced, per sensor

  const AccuracyPoint& at(const std::string& sensor, std::size_t duration_index) const;
};

AccuracyCurve run_accuracy_experiment(const ExperimentConfig& cfg, const std::vector<SensorData>& data);
AccuracyCurve run_accuracy_experiment(const ExperimentConfig& cfg);

struct DistanceRow {
  std::string sensor_id;
  std::string motion_type;
  double mean_distance = 0;
  int n_repetitions = 0;
  std::size_t resampled = 0;
};

std::vector<DistanceRow> run_distance_experiment(const ExperimentConfig& cfg, const std::vector<SensorData>& data);
std::vector<DistanceRow> run_distance_experiment(const ExperimentConfig& cfg);

struct ForecastCase {
  std::string sensor_id;
  int true_label = 1;
  int repetition = 0;
  ObservationSequence truth;
  ProbabilisticTrajectory<double> trajectory;
  Coverage coverage;
  bool correct() const { return trajectory.class_label == true_label; }
};

struct ForecastDemoResult {
  std::vector<ForecastCase> cases;  // repetition-major, then sensor, then class
  std::size_t resampled = 0;

  /// +/-1 s.d. coverage pooled over correctly classified cases.
  Coverage pooled_coverage() const;
};

ForecastDemoResult run_forecast_demo(const ExperimentConfig& cfg, const std::vector<SensorData>& data,
                                     double history_s);
ForecastDemoResult run_forecast_demo(const ExperimentConfig& cfg, double history_s);

// Output writers (plot-ready CSV).
void write_accuracy_csv(std::ostream& out, const AccuracyCurve& curve);
void write_distance_csv(std::ostream& out, const std::vector<DistanceRow>& rows);
/// One `forecast_<sensor>_class<c>.csv` per (sensor, class) of repetition 0,
/// plus `truth.csv` and `coverage.csv`.
void write_forecast_demo(const std::filesystem::path& dir, const ForecastDemoResult& result);

}  // namespace lrhmm
