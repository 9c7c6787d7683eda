#include "lrhmm/experiments.hpp"

#include "lrhmm/distance.hpp"
#include "lrhmm/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <random>
#include <thread>

namespace lrhmm {

namespace {

using Sequences = std::vector<ObservationSequence>;

/// Runs fn(r) for r in [0, n) on `workers` threads; results come back in
/// repetition order so the aggregate does not depend on scheduling.
template <typename Fn>
auto run_repetitions(int n, int workers, Fn fn) {
  using Result = decltype(fn(0));
  std::vector<std::optional<Result>> results(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int r = next++; r < n; r = next++) {
      try {
        results[static_cast<std::size_t>(r)].emplace(fn(r));
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int threads = std::min(workers, n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

using Holdout = std::array<std::size_t, 2>;

Holdout draw_holdout(std::mt19937_64& rng, const SensorData& s) {
  Holdout h{};
  for (std::size_t c = 0; c < 2; ++c) {
    std::uniform_int_distribution<std::size_t> pick(0, s.classes[c].size() - 1);
    h[c] = pick(rng);
  }
  return h;
}

Sequences without(const Sequences& seqs, std::size_t index) {
  Sequences out;
  out.reserve(seqs.size() - 1);
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    if (k != index) out.push_back(seqs[k]);
  }
  return out;
}

struct TrainedPair {
  std::array<LrHmmModel<double>, 2> models;
  std::array<Sequences, 2> train;
  Holdout holdout{};
};

TrainedPair train_pair(const SensorData& s, const Holdout& holdout, const TrainingConfig& tc) {
  TrainedPair p;
  p.holdout = holdout;
  for (std::size_t c = 0; c < 2; ++c) {
    p.train[c] = without(s.classes[c], holdout[c]);
    p.models[c] = baum_welch(p.train[c], tc).model;
  }
  return p;
}

/// Trains with the drawn holdout; a failed training is replaced by a fresh
/// holdout drawn from a stream keyed on (seed, repetition, sensor, attempt).
TrainedPair train_with_resampling(const ExperimentConfig& cfg, int rep, std::size_t sensor_index,
                                  const SensorData& s, Holdout holdout, std::size_t& resampled) {
  TrainingConfig tc = cfg.training;
  tc.rng_seed = cfg.training.rng_seed ^ static_cast<std::uint64_t>(rep);
  for (int attempt = 0;; ++attempt) {
    try {
      return train_pair(s, holdout, tc);
    } catch (const DataError& err) {
      if (attempt >= cfg.max_resamples) {
        throw DataError("sensor " + s.sensor_id + ", repetition " + std::to_string(rep) +
                        ": training failed after " + std::to_string(attempt) + " resamples: " + err.what());
      }
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                        static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(sensor_index),
                        static_cast<std::uint32_t>(attempt + 1)};
      std::mt19937_64 retry(seq);
      holdout = draw_holdout(retry, s);
      ++resampled;
    }
  }
}

void check_data(const std::vector<SensorData>& data) {
  if (data.empty()) throw UsageError("experiment has no sensors");
  for (const auto& s : data) {
    for (const auto& cls : s.classes) {
      if (cls.size() < 2) throw UsageError("sensor " + s.sensor_id + " needs >= 2 sequences per class");
    }
  }
}

Index duration_steps(double duration_s, const SensorData& s) {
  const double dt = s.classes[0].front().dt();
  const auto steps = std::max<Index>(1, static_cast<Index>(std::llround(duration_s / dt)));
  if (steps > s.classes[0].front().length()) {
    throw UsageError("history duration " + std::to_string(duration_s) + " s exceeds the sequence length");
  }
  return steps;
}

std::string format_duration(double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", d);
  return buf;
}

std::vector<Sequences> split_by_label(const Sequences& seqs, const std::string& sensor) {
  std::vector<Sequences> out(2);
  for (const auto& s : seqs) {
    if (!s.label()) throw DataError("sensor " + sensor + ": sequence without a class label");
    out[static_cast<std::size_t>(*s.label() - 1)].push_back(s);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<SensorData> prepare_experiment_data(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<SensorData> raw;
  if (!cfg.data_dir.empty()) {
    for (auto& [sensor, seqs] : load_dataset(cfg.data_dir)) {
      auto split = split_by_label(seqs, sensor);
      raw.push_back({sensor, 0.0, {std::move(split[0]), std::move(split[1])}});
    }
  } else {
    std::array<std::vector<SensorSeries>, 2> generated;
    for (std::size_t c = 0; c < 2; ++c) {
      SyntheticConfig s = cfg.synthetic[c];
      s.label = static_cast<int>(c) + 1;
      s.rng_seed = derive_seed(cfg.rng_seed, 0xDA7A0 + c);
      generated[c] = generate_synthetic(s, cfg.artifact_levels);
    }
    for (std::size_t i = 0; i < generated[0].size(); ++i) {
      raw.push_back({generated[0][i].sensor_id, generated[0][i].artifact_level,
                     {std::move(generated[0][i].sequences), std::move(generated[1][i].sequences)}});
    }
  }

  for (auto& s : raw) {
    for (auto& cls : s.classes) cls = preprocess(cls, cfg.scale_divisor, cfg.channels, false);
  }
  if (cfg.align) {
    const SensorData* reference = nullptr;
    for (const auto& s : raw) {
      if (s.sensor_id == cfg.reference_sensor) reference = &s;
    }
    std::array<std::vector<Index>, 2> ref_shifts;
    if (reference) {
      for (std::size_t c = 0; c < 2; ++c) ref_shifts[c] = alignment_shifts(reference->classes[c]);
    }
    for (auto& s : raw) {
      for (std::size_t c = 0; c < 2; ++c) {
        auto& cls = s.classes[c];
        const auto shifts = reference && reference->classes[c].size() == cls.size() ? ref_shifts[c]
                                                                                      : alignment_shifts(cls);
        cls = apply_alignment(cls, shifts);
      }
    }
  }

  std::vector<SensorData> out;
  for (auto& s : raw) {
    if (cfg.data_dir.empty() && !cfg.include_rigid && s.sensor_id == "dr1") continue;
    out.push_back(std::move(s));
  }
  check_data(out);
  return out;
}

const AccuracyPoint& AccuracyCurve::at(const std::string& sensor, std::size_t duration_index) const {
  std::size_t seen = 0;
  for (const auto& p : points) {
    if (p.sensor_id != sensor) continue;
    if (seen++ == duration_index) return p;
  }
  throw UsageError("no accuracy point for sensor " + sensor);
}

AccuracyCurve run_accuracy_experiment(const ExperimentConfig& cfg, const std::vector<SensorData>& data) {
  cfg.validate();
  check_data(data);
  if (cfg.history_durations.empty()) throw UsageError("accuracy experiment needs history durations");
  const std::size_t n_dur = cfg.history_durations.size();

  std::vector<std::vector<Index>> steps(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double d : cfg.history_durations) steps[i].push_back(duration_steps(d, data[i]));
  }

  struct RepOutcome {
    std::vector<std::vector<std::size_t>> correct;  // [sensor][duration]
    std::vector<std::size_t> resampled;
  };

  const auto outcomes = run_repetitions(cfg.n_repetitions, cfg.workers, [&](int rep) {
    RepOutcome out;
    out.correct.assign(data.size(), std::vector<std::size_t>(n_dur, 0));
    out.resampled.assign(data.size(), 0);
    std::mt19937_64 rng(cfg.rng_seed ^ static_cast<std::uint64_t>(rep));
    const Holdout holdout = draw_holdout(rng, data.front());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& s = data[i];
      const Holdout h = {std::min(holdout[0], s.classes[0].size() - 1), std::min(holdout[1], s.classes[1].size() - 1)};
      const auto pair = train_with_resampling(cfg, rep, i, s, h, out.resampled[i]);
      const Index max_steps = *std::max_element(steps[i].begin(), steps[i].end());
      for (std::size_t c = 0; c < 2; ++c) {
        const auto& test = s.classes[c][pair.holdout[c]];
        const auto ll1 = prefix_log_likelihoods(test, pair.models[0], max_steps);
        const auto ll2 = prefix_log_likelihoods(test, pair.models[1], max_steps);
        for (std::size_t d = 0; d < n_dur; ++d) {
          const auto at = static_cast<std::size_t>(steps[i][d] - 1);
          if (decide(ll1[at], ll2[at]).label == static_cast<int>(c) + 1) ++out.correct[i][d];
        }
      }
    }
    return out;
  });

  AccuracyCurve curve;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t resampled = 0;
    for (const auto& o : outcomes) resampled += o.resampled[i];
    curve.resampled[data[i].sensor_id] = resampled;
    for (std::size_t d = 0; d < n_dur; ++d) {
      AccuracyPoint p;
      p.sensor_id = data[i].sensor_id;
      p.duration_s = cfg.history_durations[d];
      p.total = 2 * static_cast<std::size_t>(cfg.n_repetitions);
      for (const auto& o : outcomes) p.correct += o.correct[i][d];
      curve.points.push_back(p);
    }
  }
  return curve;
}

AccuracyCurve run_accuracy_experiment(const ExperimentConfig& cfg) {
  return run_accuracy_experiment(cfg, prepare_experiment_data(cfg));
}

std::vector<DistanceRow> run_distance_experiment(const ExperimentConfig& cfg, const std::vector<SensorData>& data) {
  cfg.validate();
  check_data(data);
  struct RepOutcome {
    std::vector<double> distance;
    std::vector<std::size_t> resampled;
  };
  const auto outcomes = run_repetitions(cfg.n_repetitions, cfg.workers, [&](int rep) {
    RepOutcome out;
    out.distance.assign(data.size(), 0.0);
    out.resampled.assign(data.size(), 0);
    std::mt19937_64 rng(cfg.rng_seed ^ static_cast<std::uint64_t>(rep));
    const Holdout holdout = draw_holdout(rng, data.front());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& s = data[i];
      const Holdout h = {std::min(holdout[0], s.classes[0].size() - 1), std::min(holdout[1], s.classes[1].size() - 1)};
      const auto pair = train_with_resampling(cfg, rep, i, s, h, out.resampled[i]);
      out.distance[i] = cross_fitness_distance(pair.train[0], pair.train[1], pair.models[0], pair.models[1]).distance;
    }
    return out;
  });

  std::vector<DistanceRow> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    DistanceRow row;
    row.sensor_id = data[i].sensor_id;
    row.motion_type = cfg.motion_type;
    row.n_repetitions = cfg.n_repetitions;
    double sum = 0;
    for (const auto& o : outcomes) {
      sum += o.distance[i];
      row.resampled += o.resampled[i];
    }
    row.mean_distance = sum / static_cast<double>(cfg.n_repetitions);
    rows.push_back(row);
  }
  return rows;
}

std::vector<DistanceRow> run_distance_experiment(const ExperimentConfig& cfg) {
  return run_distance_experiment(cfg, prepare_experiment_data(cfg));
}

Coverage ForecastDemoResult::pooled_coverage() const {
  Coverage total;
  for (const auto& c : cases) {
    if (!c.correct()) continue;
    total.covered += c.coverage.covered;
    total.total += c.coverage.total;
  }
  return total;
}

ForecastDemoResult run_forecast_demo(const ExperimentConfig& cfg, const std::vector<SensorData>& data,
                                     double history_s) {
  cfg.validate();
  check_data(data);
  std::vector<Index> split(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    split[i] = duration_steps(history_s, data[i]);
    if (split[i] >= data[i].classes[0].front().length()) {
      throw UsageError("history must be shorter than the sequence duration");
    }
  }
  struct RepOutcome {
    std::vector<ForecastCase> cases;
    std::size_t resampled = 0;
  };
  const auto outcomes = run_repetitions(cfg.n_repetitions, cfg.workers, [&](int rep) {
    RepOutcome out;
    std::mt19937_64 rng(cfg.rng_seed ^ static_cast<std::uint64_t>(rep));
    const Holdout holdout = draw_holdout(rng, data.front());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& s = data[i];
      const Holdout h = {std::min(holdout[0], s.classes[0].size() - 1), std::min(holdout[1], s.classes[1].size() - 1)};
      const auto pair = train_with_resampling(cfg, rep, i, s, h, out.resampled);
      for (std::size_t c = 0; c < 2; ++c) {
        const auto& truth = s.classes[c][pair.holdout[c]];
        auto pt = forecast(truth.head(split[i]), pair.models[0], pair.models[1]);
        const Coverage coverage = forecast_coverage(pt, truth);
        out.cases.push_back({s.sensor_id, static_cast<int>(c) + 1, rep, truth, std::move(pt), coverage});
      }
    }
    return out;
  });
  ForecastDemoResult result;
  for (const auto& o : outcomes) {
    result.resampled += o.resampled;
    result.cases.insert(result.cases.end(), o.cases.begin(), o.cases.end());
  }
  return result;
}

ForecastDemoResult run_forecast_demo(const ExperimentConfig& cfg, double history_s) {
  return run_forecast_demo(cfg, prepare_experiment_data(cfg), history_s);
}

// ---------------------------------------------------------------------------

void write_accuracy_csv(std::ostream& out, const AccuracyCurve& curve) {
  out << "sensor,duration_s,accuracy,n_total\n";
  for (const auto& p : curve.points) {
    out << p.sensor_id << ',' << format_duration(p.duration_s) << ',' << format_double(p.accuracy()) << ','
        << p.total << '\n';
  }
}

void write_distance_csv(std::ostream& out, const std::vector<DistanceRow>& rows) {
  out << "sensor_id,motion_type,mean_distance,n_repetitions\n";
  for (const auto& r : rows) {
    out << r.sensor_id << ',' << r.motion_type << ',' << format_double(r.mean_distance) << ',' << r.n_repetitions
        << '\n';
  }
}

void write_forecast_demo(const std::filesystem::path& dir, const ForecastDemoResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream truth(dir / "truth.csv", std::ios::binary);
  if (!truth) throw DataError("cannot write " + (dir / "truth.csv").string());
  truth << "sensor,class,trial_id,time_s,channel,value\n";
  for (const auto& c : result.cases) {
    if (c.repetition != 0) continue;
    const auto path = dir / ("forecast_" + c.sensor_id + "_class" + std::to_string(c.true_label) + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_forecast_csv(out, export_forecast(c.trajectory, c.truth.dt()));
    for (Index t = c.trajectory.split_index; t < c.truth.length(); ++t) {
      for (Index ch = 0; ch < c.truth.dims(); ++ch) {
        truth << c.sensor_id << ',' << c.true_label << ',' << c.truth.trial_id() << ','
              << format_double(static_cast<double>(t) * c.truth.dt()) << ',' << ch << ','
              << format_double(c.truth.values()(t, ch)) << '\n';
      }
    }
  }

  std::ofstream cov(dir / "coverage.csv", std::ios::binary);
  if (!cov) throw DataError("cannot write " + (dir / "coverage.csv").string());
  cov << "sensor,class,n_forecasts,n_correct,covered,total,coverage\n";
  std::vector<std::pair<std::string, int>> keys;
  for (const auto& c : result.cases) {
    const std::pair<std::string, int> key{c.sensor_id, c.true_label};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [sensor, label] : keys) {
    std::size_t n = 0, n_correct = 0;
    Coverage total;
    for (const auto& c : result.cases) {
      if (c.sensor_id != sensor || c.true_label != label) continue;
      ++n;
      if (!c.correct()) continue;
      ++n_correct;
      total.covered += c.coverage.covered;
      total.total += c.coverage.total;
    }
    cov << sensor << ',' << label << ',' << n << ',' << n_correct << ',' << total.covered << ',' << total.total << ','
        << format_double(total.fraction()) << '\n';
  }
}

}  // namespace lrhmm
