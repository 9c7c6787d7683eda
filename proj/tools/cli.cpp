#include "cli.hpp"

#include "lrhmm/dataio.hpp"
#include "lrhmm/distance.hpp"
#include "lrhmm/experiments.hpp"
#include "lrhmm/forecast.hpp"
#include "lrhmm/serialization.hpp"
#include "lrhmm/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace lrhmm::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> workers;
  std::optional<int> repetitions;
  std::string durations;
  std::string data_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool experiment) {
  cmd->add_option("--config", o.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master RNG seed");
  cmd->add_option("--out", o.out_dir, "output directory")->required();
  if (experiment) {
    cmd->add_option("--workers", o.workers, "parallel workers over repetitions");
    cmd->add_option("--repetitions", o.repetitions, "number of repetitions");
    cmd->add_option("--data", o.data_dir, "dataset root (one subdirectory per sensor) instead of synthetic data");
  }
}

ExperimentConfig resolve_config(const CommonOptions& o, ExperimentConfig base) {
  ExperimentConfig cfg = o.config_path.empty() ? std::move(base) : load_experiment_config(o.config_path, std::move(base));
  if (o.seed) cfg.rng_seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.repetitions) cfg.n_repetitions = *o.repetitions;
  if (!o.durations.empty()) cfg.history_durations = parse_durations(o.durations);
  if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

/// Sequences of one sensor: either a dataset root (needs --sensor), a sensor
/// directory or a single CSV file.
std::vector<ObservationSequence> load_input(const std::string& path, const std::string& sensor) {
  const fs::path p(path);
  if (!sensor.empty()) {
    if (!fs::is_directory(p / sensor)) throw UsageError("no sensor directory " + (p / sensor).string());
    return load_csv(p / sensor);
  }
  if (fs::is_directory(p)) {
    auto seqs = load_csv(p);
    if (seqs.empty()) throw UsageError(path + " contains no CSV files; pass --sensor for a dataset root");
    return seqs;
  }
  if (!fs::exists(p)) throw UsageError("input " + path + " does not exist");
  return load_csv(p);
}

int cmd_generate(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve_config(o, default_experiment_config());
  std::size_t files = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    SyntheticConfig s = cfg.synthetic[c];
    s.label = static_cast<int>(c) + 1;
    s.rng_seed = derive_seed(cfg.rng_seed, 0xDA7A0 + c);
    for (const auto& series : generate_synthetic(s, cfg.artifact_levels)) {
      for (const auto& seq : series.sequences) {
        save_csv(dataset_file_path(o.out_dir, seq), seq);
        ++files;
      }
    }
  }
  std::cout << "wrote " << files << " sequence files to " << o.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& data, const std::string& sensor, int label,
              std::optional<int> max_iterations) {
  ExperimentConfig cfg = resolve_config(o, default_experiment_config());
  if (max_iterations) cfg.training.max_iterations = *max_iterations;
  if (o.seed) cfg.training.rng_seed = *o.seed;
  cfg.training.validate();
  std::vector<ObservationSequence> selected;
  for (auto& s : load_input(data, sensor)) {
    if (s.label() == label) selected.push_back(std::move(s));
  }
  if (selected.empty()) throw UsageError("no sequences with label " + std::to_string(label));
  selected = preprocess(selected, cfg.scale_divisor, cfg.channels, cfg.align);
  const auto result = baum_welch(selected, cfg.training);
  const std::string sensor_id = selected.front().sensor_id().empty() ? "x" : selected.front().sensor_id();
  const fs::path path = fs::path(o.out_dir) / ("model_" + sensor_id + "_class" + std::to_string(label) + ".json");
  auto out = open_output(path);
  out << model_to_json(result.model);
  std::cout << "trained " << result.model.n_states << "-state model on " << selected.size() << " sequences in "
            << result.trace.iterations_run << " iterations (converged: " << (result.trace.converged ? "yes" : "no")
            << ", log-likelihood " << format_double(result.trace.log_likelihoods.back()) << ")\n"
            << "wrote " << path.string() << "\n";
  return 0;
}

ObservationSequence load_single(const std::string& input, const ExperimentConfig& cfg) {
  auto seqs = load_csv(input);
  if (seqs.size() != 1) throw UsageError("--input must name exactly one sequence file");
  return preprocess(seqs, cfg.scale_divisor, cfg.channels, false).front();
}

Index steps_for(double seconds, const ObservationSequence& seq) {
  return std::max<Index>(1, static_cast<Index>(std::llround(seconds / seq.dt())));
}

int cmd_classify(const CommonOptions& o, const std::string& model1, const std::string& model2,
                 const std::string& input, std::optional<double> duration) {
  const ExperimentConfig cfg = resolve_config(o, default_experiment_config());
  const auto m1 = load_model(model1);
  const auto m2 = load_model(model2);
  auto seq = load_single(input, cfg);
  if (duration) seq = seq.head(std::min(steps_for(*duration, seq), seq.length()));
  const auto d = classify(seq, m1, m2);
  nlohmann::ordered_json doc;
  doc["label"] = d.label;
  doc["log_likelihoods"] = {d.log_likelihoods[0], d.log_likelihoods[1]};
  doc["margin"] = d.margin;
  doc["history_steps"] = seq.length();
  auto out = open_output(fs::path(o.out_dir) / "decision.json");
  out << doc.dump(2) << "\n";
  std::cout << "label " << d.label << " (margin " << format_double(d.margin) << ")\n";
  return 0;
}

int cmd_forecast(const CommonOptions& o, const std::string& model1, const std::string& model2,
                 const std::string& input, double history_s) {
  if (model1.empty() != model2.empty() || model1.empty() != input.empty()) {
    throw UsageError("single-trial forecast needs --model1, --model2 and --input together");
  }
  ExperimentConfig base = default_experiment_config();
  base.n_repetitions = 1;
  const ExperimentConfig cfg = resolve_config(o, base);
  if (model1.empty()) {
    const auto result = run_forecast_demo(cfg, history_s);
    write_forecast_demo(o.out_dir, result);
    const auto pooled = result.pooled_coverage();
    std::cout << "forecast demo: " << result.cases.size() << " forecasts, +/-1 s.d. coverage "
              << format_double(pooled.fraction()) << " over " << pooled.total << " points\n";
    return 0;
  }
  const auto m1 = load_model(model1);
  const auto m2 = load_model(model2);
  const auto seq = load_single(input, cfg);
  const Index split = steps_for(history_s, seq);
  if (split >= seq.length() && seq.length() < m1.n_states) {
    throw UsageError("--history must be shorter than the input sequence");
  }
  const auto pt = forecast(seq.head(std::min(split, seq.length())), m1, m2);
  auto out = open_output(fs::path(o.out_dir) / "forecast.csv");
  write_forecast_csv(out, export_forecast(pt, seq.dt()));
  std::cout << "class " << pt.class_label << ", " << pt.means.rows() << " forecast steps\n";
  return 0;
}

int cmd_distance(const CommonOptions& o) {
  ExperimentConfig base = default_experiment_config();
  base.n_repetitions = 10;
  const ExperimentConfig cfg = resolve_config(o, base);
  const auto rows = run_distance_experiment(cfg);
  auto out = open_output(fs::path(o.out_dir) / "distance.csv");
  write_distance_csv(out, rows);
  write_distance_csv(std::cout, rows);
  return 0;
}

int cmd_accuracy(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve_config(o, default_experiment_config());
  const auto curve = run_accuracy_experiment(cfg);
  auto out = open_output(fs::path(o.out_dir) / "accuracy.csv");
  write_accuracy_csv(out, curve);
  for (const auto& [sensor, count] : curve.resampled) {
    if (count) std::cout << sensor << ": " << count << " failed trainings resampled\n";
  }
  std::cout << "wrote " << (fs::path(o.out_dir) / "accuracy.csv").string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Left-right HMM motion classification and trajectory forecasting"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, cls_o, fc_o, dist_o, acc_o;

  auto* gen = app.add_subcommand("generate", "write synthetic rigid/fabric sensor data as CSV");
  add_common(gen, gen_o, false);

  std::string train_data, train_sensor;
  int train_label = 1;
  std::optional<int> train_iters;
  auto* train = app.add_subcommand("train", "Baum-Welch training of one class model");
  add_common(train, train_o, false);
  train->add_option("--data", train_data, "CSV file, sensor directory or dataset root")->required();
  train->add_option("--sensor", train_sensor, "sensor subdirectory when --data is a dataset root");
  train->add_option("--label", train_label, "class label to train on")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--max-iterations", train_iters, "EM iteration cap");

  std::string cls_m1, cls_m2, cls_input;
  std::optional<double> cls_duration;
  auto* cls = app.add_subcommand("classify", "two-class decision for one history");
  add_common(cls, cls_o, false);
  cls->add_option("--model1", cls_m1, "class 1 model JSON")->required()->check(CLI::ExistingFile);
  cls->add_option("--model2", cls_m2, "class 2 model JSON")->required()->check(CLI::ExistingFile);
  cls->add_option("--input", cls_input, "sequence CSV")->required()->check(CLI::ExistingFile);
  cls->add_option("--duration", cls_duration, "history length in seconds (default: whole input)");

  std::string fc_m1, fc_m2, fc_input;
  double fc_history = 0.5;
  auto* fc = app.add_subcommand("forecast", "probabilistic trajectory forecast (single trial or demo)");
  add_common(fc, fc_o, true);
  fc->add_option("--model1", fc_m1, "class 1 model JSON (single-trial mode)")->check(CLI::ExistingFile);
  fc->add_option("--model2", fc_m2, "class 2 model JSON (single-trial mode)")->check(CLI::ExistingFile);
  fc->add_option("--input", fc_input, "sequence CSV (single-trial mode)")->check(CLI::ExistingFile);
  fc->add_option("--history", fc_history, "history length in seconds")->check(CLI::PositiveNumber);

  auto* dist = app.add_subcommand("distance", "cross-fitness distance table");
  add_common(dist, dist_o, true);

  auto* acc = app.add_subcommand("accuracy-curve", "leave-one-out accuracy versus history duration");
  add_common(acc, acc_o, true);
  acc->add_option("--durations", acc_o.durations, "start:stop:step in seconds, e.g. 0.025:0.4:0.025");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return 0;
    }
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_o);
    if (train->parsed()) return cmd_train(train_o, train_data, train_sensor, train_label, train_iters);
    if (cls->parsed()) return cmd_classify(cls_o, cls_m1, cls_m2, cls_input, cls_duration);
    if (fc->parsed()) return cmd_forecast(fc_o, fc_m1, fc_m2, fc_input, fc_history);
    if (dist->parsed()) return cmd_distance(dist_o);
    if (acc->parsed()) return cmd_accuracy(acc_o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace lrhmm::cli
