#include "obrul/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/rng.hpp"

namespace obrul::cli {

ConfigFile parse_config_file(const fs::path& path) {
  ConfigFile file;
  file.path = path;
  try {
    file.raw_bytes = io::read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  std::string section;
  long lineno = 0;
  std::size_t pos = 0;
  while (pos <= file.raw_bytes.size()) {
    const std::size_t nl = file.raw_bytes.find('\n', pos);
    const std::string line = io::trim(
        file.raw_bytes.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
    pos = nl == std::string::npos ? file.raw_bytes.size() + 1 : nl + 1;
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("unterminated section header at " + path.string() + ":" +
                          std::to_string(lineno));
      }
      section = io::trim(line.substr(1, line.size() - 2));
      file.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at " + path.string() + ":" +
                        std::to_string(lineno));
    }
    const std::string key = io::trim(line.substr(0, eq));
    const std::string value = io::trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("key '" + key + "' outside any [section] at " + path.string() + ":" +
                        std::to_string(lineno));
    }
    file.sections[section][key] = value;
  }
  return file;
}

namespace {

class SectionReader {
 public:
  SectionReader(const ConfigFile& file, const std::string& section)
      : file_(file), section_(section) {
    auto it = file.sections.find(section);
    if (it != file.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return entries_ && entries_->count(key) && !entries_->at(key).empty();
  }

  /// Key exists, even with an empty value.
  bool present(const std::string& key) const {
    seen_.insert(key);
    return entries_ && entries_->count(key);
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    return has(key) ? entries_->at(key) : fallback;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = entries_->at(key);
    try {
      return io::parse_double(v, file_.path.string(), 0);
    } catch (const ParseError&) {
      throw ConfigError("[" + section_ + "] " + key + ": '" + v + "' is not a number");
    }
  }

  long integer(const std::string& key, long fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v)) {
      throw ConfigError("[" + section_ + "] " + key + " must be an integer");
    }
    return static_cast<long>(v);
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const std::string& v = entries_->at(key);
    for (const std::string& cell : io::split_csv_line(v)) {
      if (cell.empty()) continue;
      try {
        out.push_back(io::parse_double(cell, file_.path.string(), 0));
      } catch (const ParseError&) {
        throw ConfigError("[" + section_ + "] " + key + ": '" + cell + "' is not a number");
      }
    }
    return out;
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const std::string& v = entries_->at(key);
    std::size_t start = 0;
    while (start <= v.size()) {
      const std::size_t semi = v.find(';', start);
      const std::string item =
          io::trim(v.substr(start, semi == std::string::npos ? std::string::npos : semi - start));
      if (!item.empty()) out.push_back(item);
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    return out;
  }

  /// Every present key must have been queried.
  void finish() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section_ + "]");
      }
    }
  }

 private:
  const ConfigFile& file_;
  std::string section_;
  const std::map<std::string, std::string>* entries_ = nullptr;
  mutable std::set<std::string> seen_;
};

TrainingSection read_training(const SectionReader& s, const TrainingSection& defaults) {
  TrainingSection t = defaults;
  t.cost.lambda = s.number("lambda", defaults.cost.lambda);
  t.cost.beta = s.number("beta", defaults.cost.beta);
  t.cost.rho = s.number("rho", defaults.cost.rho);
  t.options.learning_rate = s.number("learning_rate", defaults.options.learning_rate);
  t.options.batch_size = s.integer("batch_size", defaults.options.batch_size);
  t.options.epochs = s.integer("epochs", defaults.options.epochs);
  t.options.patience = s.integer("patience", defaults.options.patience);
  t.options.validation_fraction =
      s.number("validation_fraction", defaults.options.validation_fraction);
  if (t.cost.rho <= 0.0 || t.cost.rho >= 1.0) {
    throw ConfigError("rho must lie in (0, 1)");
  }
  if (t.cost.lambda < 0.0 || t.cost.beta < 0.0) {
    throw ConfigError("lambda and beta must be non-negative");
  }
  return t;
}

}  // namespace

PipelineConfig validate_config(const ConfigFile& file, const ConfigOverrides& overrides) {
  static const std::set<std::string> known_sections = {
      "run",  "data",    "synth",      "dsp",      "normalize", "ae",
      "ffnn", "changepoint", "evaluate", "explain", "bearing"};
  for (const auto& [name, entries] : file.sections) {
    if (!known_sections.count(name)) {
      throw ConfigError("unknown config section [" + name + "]");
    }
  }

  PipelineConfig cfg;
  {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(file.raw_bytes)));
    cfg.config_hash = buf;
  }

  {
    SectionReader run(file, "run");
    const std::string file_seed = run.get("seed", "42");
    const std::string file_out = run.get("out_dir", "out");
    const std::string seed_text = !overrides.seed.empty() ? overrides.seed : file_seed;
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), seed);
    if (ec != std::errc{} || ptr != seed_text.data() + seed_text.size()) {
      throw ConfigError("seed '" + seed_text + "' is not an unsigned integer");
    }
    cfg.seed = seed;
    cfg.out_dir = !overrides.out_dir.empty() ? fs::path(overrides.out_dir) : fs::path(file_out);
    run.finish();
  }

  {
    SectionReader data(file, "data");
    cfg.source = data.get("source", "synth");
    if (cfg.source != "synth" && cfg.source != "csv") {
      throw ConfigError("[data] source must be 'synth' or 'csv'");
    }
    for (const std::string& d : data.list("train_dirs")) cfg.train_dirs.emplace_back(d);
    for (const std::string& d : data.list("test_dirs")) cfg.test_dirs.emplace_back(d);
    if (cfg.source == "csv") {
      if (cfg.train_dirs.empty()) {
        throw ConfigError("[data] source=csv requires train_dirs");
      }
      for (const auto& d : cfg.train_dirs) {
        if (!fs::exists(d)) throw ConfigError("train_dirs entry does not exist: " + d.string());
      }
      for (const auto& d : cfg.test_dirs) {
        if (!fs::exists(d)) throw ConfigError("test_dirs entry does not exist: " + d.string());
      }
    }
    data.finish();
  }

  {
    SectionReader bearing(file, "bearing");
    cfg.bearing.n_balls = static_cast<int>(bearing.integer("n_balls", 13));
    cfg.bearing.ball_diameter = bearing.number("ball_diameter_mm", 3.5);
    cfg.bearing.pitch_diameter = bearing.number("pitch_diameter_mm", 25.6);
    cfg.bearing.contact_angle_rad =
        bearing.number("contact_angle_deg", 0.0) * 3.14159265358979323846 / 180.0;
    cfg.bearing.shaft_hz = bearing.number("shaft_hz", 30.0);
    bearing.finish();
  }

  {
    SectionReader synth(file, "synth");
    cfg.synth_train_runs = synth.integer("train_runs", 5);
    cfg.synth_test_runs = synth.integer("test_runs", 2);
    cfg.synth.sample_rate_hz = synth.number("sample_rate_hz", 25600.0);
    cfg.synth.record_len = synth.integer("record_len", 2560);
    cfg.synth.record_interval_s = synth.number("record_interval_s", 10.0);
    cfg.synth.duration_records = synth.integer("duration_records", 100);
    cfg.onset_fraction = synth.number("onset_fraction", 0.6);
    cfg.synth.shaft_hz = synth.number("shaft_hz", cfg.bearing.shaft_hz);
    cfg.synth.fault_freqs_hz = synth.numbers("fault_freqs_hz");
    if (cfg.synth.fault_freqs_hz.empty()) {
      const auto cf = explain::characteristic_frequencies(cfg.bearing);
      cfg.synth.fault_freqs_hz = {cf.bpfo, cf.bpfi, cf.bsf, cf.ftf};
    }
    cfg.synth.resonance_centers_hz = synth.numbers("resonance_centers_hz");
    if (cfg.synth.resonance_centers_hz.empty() && !synth.present("resonance_centers_hz")) {
      cfg.synth.resonance_centers_hz = {4000.0, 8000.0};
    }
    cfg.synth.degradation_rate = synth.number("degradation_rate", 0.08);
    cfg.synth.noise_std_g = synth.number("noise_std_g", 0.02);
    cfg.synth.shaft_amp_g = synth.number("shaft_amp_g", 0.5);
    cfg.synth.fault_amp_g = synth.number("fault_amp_g", 0.05);
    cfg.synth.resonance_amp_g = synth.number("resonance_amp_g", 0.05);
    cfg.synth.resonance_bandwidth_frac = synth.number("resonance_bandwidth_frac", 0.05);
    cfg.synth.resonance_components =
        static_cast<int>(synth.integer("resonance_components", 7));
    synth.finish();

    if (cfg.onset_fraction <= 0.0 || cfg.onset_fraction >= 1.0) {
      throw ConfigError("[synth] onset_fraction must lie in (0, 1)");
    }
    cfg.synth.degradation_onset_record = static_cast<Index>(
        std::floor(cfg.onset_fraction * static_cast<double>(cfg.synth.duration_records)));
    if (cfg.source == "synth" && (cfg.synth_train_runs < 1 || cfg.synth_test_runs < 0)) {
      throw ConfigError("[synth] needs at least one training run");
    }
  }

  {
    SectionReader dsp_section(file, "dsp");
    cfg.band_m = dsp_section.number("m", 32.0);
    cfg.band_n = static_cast<int>(dsp_section.integer("n", 16));
    if (cfg.band_m <= 0.0 || cfg.band_n < 1) {
      throw ConfigError("[dsp] requires m > 0 and n >= 1");
    }
    dsp_section.finish();
  }

  {
    SectionReader norm(file, "normalize");
    cfg.fit_fraction = norm.number("fit_fraction", 0.8);
    if (cfg.fit_fraction <= 0.0 || cfg.fit_fraction > 1.0) {
      throw ConfigError("[normalize] fit_fraction must lie in (0, 1]");
    }
    norm.finish();
  }

  {
    SectionReader ae(file, "ae");
    cfg.ae_hidden1 = ae.integer("hidden1", 64);
    cfg.ae_hidden2 = ae.integer("hidden2", 16);
    cfg.ae_bottleneck = ae.integer("bottleneck", 4);
    cfg.ae_dec_hidden = ae.integer("dec_hidden", 64);
    TrainingSection defaults;
    defaults.cost = {1e-4, 1e-2, 0.05};
    defaults.options.learning_rate = 1e-3;
    defaults.options.batch_size = 32;
    defaults.options.epochs = 500;
    defaults.options.patience = 60;
    defaults.options.validation_fraction = 0.5;
    cfg.ae_training = read_training(ae, defaults);
    const std::string file_pool = ae.get("pool", "train");
    cfg.ae_pool = !overrides.ae_pool.empty() ? overrides.ae_pool : file_pool;
    if (cfg.ae_pool != "train" && cfg.ae_pool != "train+test") {
      throw ConfigError("[ae] pool must be 'train' or 'train+test'");
    }
    ae.finish();
  }

  {
    SectionReader ffnn(file, "ffnn");
    cfg.ffnn_hidden1 = ffnn.integer("hidden1", 8);
    cfg.ffnn_hidden2 = ffnn.integer("hidden2", 4);
    TrainingSection defaults;
    defaults.cost = {1e-4, 0.0, 0.05};
    defaults.options.learning_rate = 1e-3;
    defaults.options.batch_size = 32;
    defaults.options.epochs = 800;
    defaults.options.patience = 100;
    defaults.options.validation_fraction = 0.3;
    cfg.ffnn_training = read_training(ffnn, defaults);
    ffnn.finish();
  }

  {
    SectionReader cp(file, "changepoint");
    cfg.changepoint_penalty = cp.number("penalty", 0.0);
    cfg.changepoint_penalty_scale = cp.number("penalty_scale", 1.0);
    cfg.changepoint_max_k = cp.integer("max_k", 1);
    if (cfg.changepoint_max_k < 1) {
      throw ConfigError("[changepoint] max_k must be >= 1");
    }
    if (!(cfg.changepoint_penalty_scale > 0.0)) {
      throw ConfigError("[changepoint] penalty_scale must be positive");
    }
    cp.finish();
  }

  {
    SectionReader ev(file, "evaluate");
    cfg.evaluate_runs = ev.get("runs", "all");
    if (cfg.evaluate_runs != "all" && cfg.evaluate_runs != "train" &&
        cfg.evaluate_runs != "test") {
      throw ConfigError("[evaluate] runs must be all, train, or test");
    }
    ev.finish();
  }

  {
    SectionReader ex(file, "explain");
    cfg.sweep_min = ex.number("sweep_min", -1.0);
    cfg.sweep_max = ex.number("sweep_max", 3.0);
    cfg.sweep_step = ex.number("sweep_step", 0.5);
    cfg.harmonics = static_cast<int>(ex.integer("harmonics", 3));
    cfg.explain_run = ex.get("run", "");
    if (!(cfg.sweep_step > 0.0) || cfg.sweep_max < cfg.sweep_min) {
      throw ConfigError("[explain] sweep range is empty");
    }
    ex.finish();
  }

  return cfg;
}

std::string default_config_text() {
  return R"(# obrul pipeline configuration (key = value; '#' starts a comment)

[run]
seed = 42
out_dir = out

[data]
# source: synth (generate runs) or csv (read canonical record CSV directories)
source = synth
# csv mode: semicolon-separated directories, each holding rec-*.csv + meta.txt
train_dirs =
test_dirs =

[synth]
train_runs = 5
test_runs = 2
sample_rate_hz = 25600
record_len = 2560
record_interval_s = 10
duration_records = 100
onset_fraction = 0.6
shaft_hz = 30
# empty: derived from [bearing] as BPFO,BPFI,BSF,FTF
fault_freqs_hz =
resonance_centers_hz = 4000,8000
degradation_rate = 0.08
noise_std_g = 0.02
shaft_amp_g = 0.5
fault_amp_g = 0.05
resonance_amp_g = 0.05
resonance_bandwidth_frac = 0.05
resonance_components = 7

[dsp]
# constant absolute band width (Hz) and bands per octave
m = 32
n = 16

[normalize]
fit_fraction = 0.8

[ae]
hidden1 = 64
hidden2 = 16
bottleneck = 4
dec_hidden = 64
lambda = 1e-4
beta = 1e-2
rho = 0.05
learning_rate = 1e-3
batch_size = 32
epochs = 500
patience = 60
validation_fraction = 0.5
# train or train+test: which runs feed autoencoder training
pool = train

[ffnn]
hidden1 = 8
hidden2 = 4
lambda = 1e-4
beta = 0
rho = 0.05
learning_rate = 1e-3
batch_size = 32
epochs = 800
patience = 100
validation_fraction = 0.3

[changepoint]
# penalty 0 selects 2 * sigma^2 * log(T) per feature row, times penalty_scale;
# raise penalty_scale to ignore slow feature drift and keep only sharp shifts
penalty = 0
penalty_scale = 1
max_k = 1

[evaluate]
# all, train, or test
runs = all

[explain]
sweep_min = -1
sweep_max = 3
sweep_step = 0.5
harmonics = 3
# run id for the exported spectrogram; empty: first run
run =

[bearing]
n_balls = 13
ball_diameter_mm = 3.5
pitch_diameter_mm = 25.6
contact_angle_deg = 0
shaft_hz = 30
)";
}

}  // namespace obrul::cli
