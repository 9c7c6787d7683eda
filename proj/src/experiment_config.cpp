#include "lrhmm/experiments.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace lrhmm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0;
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw UsageError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw UsageError("config key '" + key + "': expected an unsigned integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Returns false when `key` is not a synthetic-generator key.
bool apply_synthetic_key(SyntheticConfig& s, const std::string& key, const std::string& full_key,
                         const std::string& value) {
  if (key == "omega") s.omega = to_double(full_key, value);
  else if (key == "amplitude") s.amplitude = to_double(full_key, value);
  else if (key == "artifact_amplitude") s.artifact_amplitude = to_double(full_key, value);
  else if (key == "artifact_phase_lag") s.artifact_phase_lag = to_double(full_key, value);
  else if (key == "noise_std") s.noise_std = to_double(full_key, value);
  else if (key == "duration_s") s.duration_s = to_double(full_key, value);
  else if (key == "dt") s.dt = to_double(full_key, value);
  else if (key == "n_sequences") s.n_sequences = static_cast<int>(to_integer(full_key, value));
  else if (key == "random_start_phase") s.random_start_phase = to_bool(full_key, value);
  else return false;
  return true;
}

}  // namespace

std::vector<double> parse_durations(const std::string& text) {
  std::vector<double> out;
  const std::string t = trim(text);
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("durations must be start:stop:step");
    const double start = to_double("durations", parts[0]);
    const double stop = to_double("durations", parts[1]);
    const double step = to_double("durations", parts[2]);
    if (!(step > 0) || stop < start) throw UsageError("durations need step > 0 and stop >= start");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
  } else {
    for (const auto& item : split_list(t)) out.push_back(to_double("durations", item));
  }
  if (out.empty()) throw UsageError("durations list is empty");
  for (double d : out) {
    if (!(d > 0)) throw UsageError("durations must be positive");
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.history_durations = parse_durations("0.025:0.4:0.025");
  const double delay_s = 0.3;
  for (int c = 0; c < 2; ++c) {
    auto& s = cfg.synthetic[static_cast<std::size_t>(c)];
    s.omega = (c == 0 ? 1.05 : 1.48) * EIGEN_PI;
    s.amplitude = 100.0;
    s.noise_std = 12.0;
    s.duration_s = 5.0;
    s.dt = 0.025;
    s.n_sequences = 30;
    s.random_start_phase = false;
    s.artifact_phase_lag = -s.omega * delay_s;
    s.label = c + 1;
  }
  cfg.training.max_iterations = 10;
  cfg.training.covariance_floor = 1e-3;
  return cfg;
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "seed") cfg.rng_seed = to_seed(key, value);
  else if (key == "repetitions") cfg.n_repetitions = static_cast<int>(to_integer(key, value));
  else if (key == "durations") cfg.history_durations = parse_durations(value);
  else if (key == "history_s") cfg.history_s = to_double(key, value);
  else if (key == "data_dir") cfg.data_dir = trim(value);
  else if (key == "levels") {
    cfg.artifact_levels.clear();
    for (const auto& item : split_list(value)) cfg.artifact_levels.push_back(to_double(key, item));
  } else if (key == "include_rigid") cfg.include_rigid = to_bool(key, value);
  else if (key == "scale_divisor") cfg.scale_divisor = to_double(key, value);
  else if (key == "channels") {
    cfg.channels.clear();
    for (const auto& item : split_list(value)) cfg.channels.push_back(static_cast<Index>(to_integer(key, item)));
  } else if (key == "align") cfg.align = to_bool(key, value);
  else if (key == "reference_sensor") cfg.reference_sensor = trim(value);
  else if (key == "motion_type") cfg.motion_type = trim(value);
  else if (key == "workers") cfg.workers = static_cast<int>(to_integer(key, value));
  else if (key == "max_resamples") cfg.max_resamples = static_cast<int>(to_integer(key, value));
  else if (key == "train.max_iterations") cfg.training.max_iterations = static_cast<int>(to_integer(key, value));
  else if (key == "train.tolerance") cfg.training.loglik_rel_tolerance = to_double(key, value);
  else if (key == "train.covariance_eps") cfg.training.covariance_floor_eps = to_double(key, value);
  else if (key == "train.covariance_floor") cfg.training.covariance_floor = to_double(key, value);
  else if (key == "train.seed") cfg.training.rng_seed = to_seed(key, value);
  else if (key == "train.band_width") cfg.training.band_width = static_cast<Index>(to_integer(key, value));
  else if (key == "artifact_delay_s") {
    const double delay = to_double(key, value);
    for (auto& s : cfg.synthetic) s.artifact_phase_lag = -s.omega * delay;
  } else if (key.rfind("class1.", 0) == 0 || key.rfind("class2.", 0) == 0) {
    auto& s = cfg.synthetic[key[5] == '1' ? 0 : 1];
    const std::string sub = key.substr(7);
    if (sub == "artifact_delay_s") {
      s.artifact_phase_lag = -s.omega * to_double(key, value);
    } else if (!apply_synthetic_key(s, sub, key, value)) {
      throw UsageError("unknown config key '" + key + "'");
    }
  } else {
    bool applied = false;
    for (auto& s : cfg.synthetic) applied = apply_synthetic_key(s, key, key, value);
    if (!applied) throw UsageError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_experiment_config(std::istream& in, ExperimentConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_entry(cfg, text.substr(0, eq), text.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  return parse_experiment_config(in, std::move(base));
}

void ExperimentConfig::validate() const {
  if (n_repetitions < 1) throw UsageError("repetitions must be >= 1");
  if (workers < 1) throw UsageError("workers must be >= 1");
  if (max_resamples < 0) throw UsageError("max_resamples must be >= 0");
  if (channels.empty()) throw UsageError("channel selection is empty");
  if (scale_divisor == 0) throw UsageError("scale_divisor must be non-zero");
  for (double d : history_durations) {
    if (!(d > 0)) throw UsageError("durations must be positive");
  }
  training.validate();
  if (data_dir.empty()) {
    for (const auto& s : synthetic) {
      s.validate();
      for (double d : history_durations) {
        if (d > s.duration_s + 1e-9) throw UsageError("history duration exceeds the sequence duration");
      }
    }
  }
}

}  // namespace lrhmm
