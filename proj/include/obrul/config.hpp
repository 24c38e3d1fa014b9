#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "obrul/explain.hpp"
#include "obrul/ingest.hpp"
#include "obrul/neural.hpp"
#include "obrul/types.hpp"

namespace obrul::cli {

namespace fs = std::filesystem;

/// Raw sectioned key=value config as read from disk.
struct ConfigFile {
  fs::path path;
  std::string raw_bytes;
  std::map<std::string, std::map<std::string, std::string>> sections;
};

ConfigFile parse_config_file(const fs::path& path);

struct TrainingSection {
  neural::CostConfig cost;
  neural::TrainOptions options;
};

/// Validated, typed pipeline configuration.
struct PipelineConfig {
  std::uint64_t seed = 42;
  fs::path out_dir = "out";
  std::string config_hash;  // 16 hex digits over the raw config bytes

  // data
  std::string source = "synth";  // synth | csv
  std::vector<fs::path> train_dirs;
  std::vector<fs::path> test_dirs;

  // synth
  Index synth_train_runs = 5;
  Index synth_test_runs = 2;
  ingest::SynthConfig synth;  // per-run seed filled in by the synth stage
  double onset_fraction = 0.6;

  // dsp
  double band_m = 32.0;
  int band_n = 16;

  double fit_fraction = 0.8;

  // networks
  Index ae_hidden1 = 64;
  Index ae_hidden2 = 16;
  Index ae_bottleneck = 4;
  Index ae_dec_hidden = 64;
  TrainingSection ae_training;
  std::string ae_pool = "train";  // train | train+test

  Index ffnn_hidden1 = 8;
  Index ffnn_hidden2 = 4;
  TrainingSection ffnn_training;

  // changepoint
  double changepoint_penalty = 0.0;  // <= 0: variance-scaled default
  double changepoint_penalty_scale = 1.0;
  Index changepoint_max_k = 1;

  // evaluate
  std::string evaluate_runs = "all";  // all | train | test

  // explain
  double sweep_min = -1.0;
  double sweep_max = 3.0;
  double sweep_step = 0.5;
  int harmonics = 3;
  std::string explain_run;  // empty: first run

  explain::BearingGeometry bearing;
};

struct ConfigOverrides {
  std::string out_dir;
  std::string seed;
  std::string ae_pool;
};

/// Validates sections, keys, and values; unknown keys are config errors.
PipelineConfig validate_config(const ConfigFile& file, const ConfigOverrides& overrides = {});

/// A fully commented template with the default values.
std::string default_config_text();

}  // namespace obrul::cli
