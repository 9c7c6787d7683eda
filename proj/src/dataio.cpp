#include "lrhmm/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace lrhmm {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(const std::string& cell, double& value) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, cell.data() + cell.size(), value);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

std::string sensor_from_column(const std::string& column) {
  const auto pos = column.rfind("_c");
  if (pos == std::string::npos || pos + 2 >= column.size()) return column;
  const bool digits = std::all_of(column.begin() + static_cast<std::ptrdiff_t>(pos) + 2, column.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
  return digits ? column.substr(0, pos) : column;
}

}  // namespace

void write_sequence_csv(std::ostream& out, const ObservationSequence& seq) {
  const std::string sensor = seq.sensor_id().empty() ? "x" : seq.sensor_id();
  out << "t";
  for (Index c = 0; c < seq.dims(); ++c) out << ',' << sensor << "_c" << c;
  out << '\n';
  out << "# trial_id=" << seq.trial_id() << '\n';
  if (seq.label()) out << "# label=" << *seq.label() << '\n';
  out << "# dt=" << format_double(seq.dt()) << '\n';
  for (Index t = 0; t < seq.length(); ++t) {
    out << format_double(static_cast<double>(t) * seq.dt());
    for (Index c = 0; c < seq.dims(); ++c) out << ',' << format_double(seq.values()(t, c));
    out << '\n';
  }
}

void save_csv(const fs::path& path, const ObservationSequence& seq) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_sequence_csv(out, seq);
}

ObservationSequence parse_sequence_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::string sensor;
  std::optional<double> dt;
  std::optional<int> label;
  std::int64_t trial_id = 0;
  std::vector<double> times;
  std::vector<double> cells;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const std::string body = trim(std::string_view(text).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string val = trim(std::string_view(body).substr(eq + 1));
      double number = 0;
      if (key == "trial_id" || key == "label" || key == "dt") {
        if (!parse_number(val, number) || !std::isfinite(number)) {
          throw ParseError(source, line_no, "invalid value for " + key);
        }
      }
      if (key == "trial_id") trial_id = static_cast<std::int64_t>(number);
      if (key == "label") {
        if (number != 1 && number != 2) throw ParseError(source, line_no, "label must be 1 or 2");
        label = static_cast<int>(number);
      }
      if (key == "dt") {
        if (!(number > 0)) throw ParseError(source, line_no, "dt must be positive");
        dt = number;
      }
      continue;
    }
    const auto fields = split_fields(text);
    if (columns == 0) {
      if (fields.size() < 2 || fields.front() != "t") {
        throw ParseError(source, line_no, "header must be t,<sensor>_c0[,...]");
      }
      columns = fields.size();
      sensor = sensor_from_column(fields[1]);
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0;
      if (!parse_number(fields[i], v)) throw ParseError(source, line_no, "non-numeric cell '" + fields[i] + "'");
      if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite cell '" + fields[i] + "'");
      if (i == 0) {
        times.push_back(v);
      } else {
        cells.push_back(v);
      }
    }
  }
  if (columns == 0) throw ParseError(source, line_no, "missing header line");
  if (times.empty()) throw ParseError(source, line_no, "no data rows");
  if (!dt) {
    if (times.size() < 2 || !(times[1] > times[0])) {
      throw ParseError(source, line_no, "dt missing and cannot be inferred from the t column");
    }
    dt = times[1] - times[0];
  }
  const auto steps = static_cast<Index>(times.size());
  const auto dims = static_cast<Index>(columns - 1);
  RowMatrix<double> values = Eigen::Map<const RowMatrix<double>>(cells.data(), steps, dims);
  return ObservationSequence(std::move(values), *dt, label, sensor, trial_id);
}

std::vector<ObservationSequence> load_csv(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<ObservationSequence> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw ParseError(f.string(), 0, "cannot open file");
    out.push_back(parse_sequence_csv(in, f.string()));
  }
  return out;
}

std::map<std::string, std::vector<ObservationSequence>> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw ParseError(root.string(), 0, "dataset root is not a directory");
  std::map<std::string, std::vector<ObservationSequence>> out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto seqs = load_csv(d);
    if (!seqs.empty()) out[d.filename().string()] = std::move(seqs);
  }
  if (out.empty()) throw ParseError(root.string(), 0, "no sensor directories with CSV files");
  return out;
}

fs::path dataset_file_path(const fs::path& root, const ObservationSequence& seq) {
  std::ostringstream name;
  name << "class" << seq.label().value_or(0) << "_trial" << std::setw(3) << std::setfill('0')
       << seq.trial_id() << ".csv";
  return root / (seq.sensor_id().empty() ? std::string("x") : seq.sensor_id()) / name.str();
}

// ---------------------------------------------------------------------------
// Preprocessing

Index best_circular_shift(const Vector<double>& reference, const Vector<double>& x) {
  const Index n = x.size();
  const Index overlap = std::min(reference.size(), n);
  if (overlap < 1) throw UsageError("cannot align empty sequences");
  const Vector<double> ref = reference.head(overlap).array() - reference.head(overlap).mean();
  const Vector<double> centered = x.array() - x.mean();
  Index best_shift = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Index s = 0; s < n; ++s) {
    double acc = 0;
    for (Index t = 0; t < overlap; ++t) acc += ref(t) * centered((t + s) % n);
    if (acc > best) {
      best = acc;
      best_shift = s;
    }
  }
  return best_shift;
}

std::vector<Index> alignment_shifts(std::span<const ObservationSequence> seqs) {
  std::vector<Index> shifts;
  if (seqs.empty()) return shifts;
  const Vector<double> ref = seqs.front().values().col(0);
  shifts.reserve(seqs.size());
  for (const auto& s : seqs) shifts.push_back(best_circular_shift(ref, s.values().col(0)));
  return shifts;
}

std::vector<ObservationSequence> apply_alignment(std::span<const ObservationSequence> seqs,
                                                 std::span<const Index> shifts) {
  if (seqs.size() != shifts.size()) throw UsageError("one shift per sequence required");
  if (seqs.empty()) return {};
  Index common = seqs.front().length();
  for (const auto& s : seqs) common = std::min(common, s.length());
  std::vector<ObservationSequence> out;
  out.reserve(seqs.size());
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    const auto& s = seqs[k];
    const Index n = s.length();
    const Index shift = ((shifts[k] % n) + n) % n;
    RowMatrix<double> v(common, s.dims());
    for (Index t = 0; t < common; ++t) v.row(t) = s.values().row((t + shift) % n);
    out.emplace_back(std::move(v), s.dt(), s.label(), s.sensor_id(), s.trial_id());
  }
  return out;
}

std::vector<ObservationSequence> preprocess(std::span<const ObservationSequence> seqs, double scale_divisor,
                                            const std::vector<Index>& channels, bool align) {
  if (channels.empty()) throw UsageError("channel selection is empty");
  if (scale_divisor == 0 || !std::isfinite(scale_divisor)) {
    throw UsageError("scale divisor must be finite and non-zero");
  }
  std::vector<ObservationSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    RowMatrix<double> v(s.length(), static_cast<Index>(channels.size()));
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] < 0 || channels[c] >= s.dims()) {
        throw UsageError("channel index " + std::to_string(channels[c]) + " out of range");
      }
      v.col(static_cast<Index>(c)) = s.values().col(channels[c]) / scale_divisor;
    }
    out.emplace_back(std::move(v), s.dt(), s.label(), s.sensor_id(), s.trial_id());
  }
  if (!align) return out;
  const auto shifts = alignment_shifts(out);
  return apply_alignment(out, shifts);
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticConfig::validate() const {
  if (!(dt > 0)) throw UsageError("synthetic dt must be positive");
  if (!(duration_s >= dt)) throw UsageError("synthetic duration must be at least dt");
  if (n_sequences < 1) throw UsageError("synthetic n_sequences must be >= 1");
  if (!(noise_std >= 0)) throw UsageError("synthetic noise_std must be >= 0");
  if (!(artifact_amplitude >= 0)) throw UsageError("synthetic artifact_amplitude must be >= 0");
  if (label != 1 && label != 2) throw UsageError("synthetic label must be 1 or 2");
  if (!std::isfinite(omega) || !std::isfinite(amplitude) || !std::isfinite(artifact_phase_lag)) {
    throw UsageError("synthetic parameters must be finite");
  }
}

Index SyntheticConfig::steps() const {
  return std::max<Index>(1, static_cast<Index>(std::llround(duration_s / dt)));
}

std::string fabric_sensor_id(std::size_t level_index) { return "df" + std::to_string(level_index + 2); }

std::vector<SensorSeries> generate_synthetic(const SyntheticConfig& config,
                                             const std::vector<double>& artifact_levels) {
  config.validate();
  for (double a : artifact_levels) {
    if (!(a >= 0) || !std::isfinite(a)) throw UsageError("artifact levels must be finite and >= 0");
  }
  const Index steps = config.steps();
  std::vector<SensorSeries> out;
  out.push_back({"dr1", 0.0, {}});
  for (std::size_t i = 0; i < artifact_levels.size(); ++i) {
    out.push_back({fabric_sensor_id(i), artifact_levels[i], {}});
  }
  for (auto& s : out) s.sequences.reserve(static_cast<std::size_t>(config.n_sequences));

  for (int k = 0; k < config.n_sequences; ++k) {
    std::mt19937_64 rng(config.rng_seed ^ static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * EIGEN_PI);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double phase0 = config.random_start_phase ? phase_dist(rng) : 0.0;

    RowMatrix<double> rigid(steps, 1);
    for (Index t = 0; t < steps; ++t) {
      const double time = static_cast<double>(t) * config.dt;
      rigid(t, 0) = config.amplitude * std::cos(config.omega * time + phase0) + config.noise_std * noise(rng);
    }
    for (std::size_t i = 0; i < artifact_levels.size(); ++i) {
      const double gain = artifact_levels[i] * config.artifact_amplitude * config.amplitude;
      RowMatrix<double> fabric(steps, 1);
      for (Index t = 0; t < steps; ++t) {
        const double time = static_cast<double>(t) * config.dt;
        fabric(t, 0) = rigid(t, 0) + gain * std::cos(config.omega * time + phase0 + config.artifact_phase_lag) +
                       config.noise_std * noise(rng);
      }
      out[i + 1].sequences.emplace_back(std::move(fabric), config.dt, config.label, out[i + 1].sensor_id, k);
    }
    out[0].sequences.emplace_back(std::move(rigid), config.dt, config.label, "dr1", k);
  }
  return out;
}

}  // namespace lrhmm
