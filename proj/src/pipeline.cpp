#include "obrul/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "obrul/dsp.hpp"
#include "obrul/errors.hpp"
#include "obrul/explain.hpp"
#include "obrul/ingest.hpp"
#include "obrul/io.hpp"
#include "obrul/models.hpp"
#include "obrul/neural.hpp"
#include "obrul/preprocess.hpp"
#include "obrul/prognosis.hpp"
#include "obrul/rng.hpp"

namespace obrul::cli {

namespace {

struct RunInfo {
  std::string id;
  std::string role;      // train or test
  fs::path records_dir;  // canonical record CSVs + meta.txt
};

struct Manifest {
  std::string stage;
  const PipelineConfig* cfg = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  Manifest(std::string stage_name, const PipelineConfig* config)
      : stage(std::move(stage_name)), cfg(config) {}

  void input(const fs::path& p) { inputs.push_back(p.string()); }
  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(const Workspace& ws) const {
    std::string text;
    text += "stage = " + stage + "\n";
    text += "config_hash = " + cfg->config_hash + "\n";
    text += "seed = " + std::to_string(cfg->seed) + "\n";
    for (const auto& p : inputs) text += "input = " + p + "\n";
    for (const auto& p : outputs) text += "output = " + p + "\n";
    io::write_text_file(ws.manifest(stage), text);
  }
};

/// Exclusive workspace lock; one stage runs at a time per output directory.
class LockGuard {
 public:
  explicit LockGuard(const fs::path& file) : file_(file) {
    fs::create_directories(file.parent_path());
    std::FILE* f = std::fopen(file.string().c_str(), "wx");
    if (!f) {
      throw ConfigError("workspace is locked (remove " + file.string() +
                        " if no other run is active)");
    }
    std::fclose(f);
  }
  ~LockGuard() {
    std::error_code ec;
    fs::remove(file_, ec);
  }
  LockGuard(const LockGuard&) = delete;
  LockGuard& operator=(const LockGuard&) = delete;

 private:
  fs::path file_;
};

void require_artifact(const fs::path& path, const std::string& produced_by) {
  if (!fs::exists(path)) {
    throw DependencyError("missing " + path.string() + "; run stage '" + produced_by +
                          "' first");
  }
}

std::vector<RunInfo> read_runs(const PipelineConfig& cfg, const Workspace& ws) {
  require_artifact(ws.runs_csv(), cfg.source == "synth" ? "synth" : "preprocess");
  const io::CsvTable table = io::read_csv(ws.runs_csv());
  std::vector<RunInfo> runs;
  for (const auto& row : table.rows) {
    if (row.size() != 3) {
      throw ParseError("bad runs.csv row in " + ws.runs_csv().string());
    }
    runs.push_back({row[0], row[1], fs::path(row[2])});
  }
  if (runs.empty()) {
    throw NoDataError("runs.csv lists no runs");
  }
  return runs;
}

void write_runs(const Workspace& ws, const std::vector<RunInfo>& runs) {
  std::vector<std::vector<std::string>> rows;
  for (const RunInfo& run : runs) {
    rows.push_back({run.id, run.role, run.records_dir.string()});
  }
  io::write_csv(ws.runs_csv(), {"run_id", "role", "records_dir"}, rows);
}

std::vector<RunInfo> configured_runs(const PipelineConfig& cfg, const Workspace& ws) {
  std::vector<RunInfo> runs;
  if (cfg.source == "synth") {
    for (Index i = 0; i < cfg.synth_train_runs; ++i) {
      const std::string id = "train-" + std::to_string(i + 1);
      runs.push_back({id, "train", ws.records_dir(id)});
    }
    for (Index i = 0; i < cfg.synth_test_runs; ++i) {
      const std::string id = "test-" + std::to_string(i + 1);
      runs.push_back({id, "test", ws.records_dir(id)});
    }
  } else {
    std::set<std::string> ids;
    auto add = [&](fs::path dir, const char* role) {
      if (dir.filename().empty()) dir = dir.parent_path();
      // Prefer the leaf name; climb toward the root until the id is unique.
      std::string id = dir.filename().string();
      fs::path up = dir.parent_path();
      while (ids.count(id)) {
        if (up.filename().empty()) {
          throw ConfigError("cannot derive a unique run id for " + dir.string());
        }
        id = up.filename().string() + "-" + id;
        up = up.parent_path();
      }
      ids.insert(id);
      runs.push_back({id, role, dir});
    };
    for (const auto& d : cfg.train_dirs) add(d, "train");
    for (const auto& d : cfg.test_dirs) add(d, "test");
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void stage_synth(const PipelineConfig& cfg, const Workspace& ws) {
  if (cfg.source != "synth") {
    throw ConfigError("stage 'synth' requires [data] source = synth");
  }
  Manifest manifest{"synth", &cfg};
  const std::uint64_t seed = stage_seed(cfg.seed, "synth");
  const std::vector<RunInfo> runs = configured_runs(cfg, ws);
  for (const RunInfo& run : runs) {
    ingest::SynthConfig synth = cfg.synth;
    synth.seed = seed ^ fnv1a64(run.id);
    const ingest::RecordSet set = ingest::synth_bearing_run(synth);
    ingest::write_record_set(set, run.records_dir);
    manifest.output(run.records_dir);
  }
  write_runs(ws, runs);
  manifest.output(ws.runs_csv());
  manifest.write(ws);
}

void stage_preprocess(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"preprocess", &cfg};
  std::vector<RunInfo> runs;
  if (cfg.source == "synth") {
    runs = read_runs(ws, "synth");
  } else {
    runs = configured_runs(cfg, ws);
    write_runs(ws, runs);
    manifest.output(ws.runs_csv());
  }

  bool wrote_bands = false;
  for (const RunInfo& run : runs) {
    require_artifact(run.records_dir / "meta.txt",
                     cfg.source == "synth" ? "synth" : "preprocess");
    const ingest::RecordFormat fmt = ingest::load_record_format(run.records_dir / "meta.txt");
    const ingest::RecordSet set = ingest::load_record_set(run.records_dir, fmt);
    manifest.input(run.records_dir);

    const Vector window = dsp::hann_window(set.record_len);
    const dsp::OctaveBandSpec spec =
        dsp::band_edges(cfg.band_m, cfg.band_n, set.sample_rate_hz / 2.0);
    if (!wrote_bands) {
      dsp::write_band_spec_csv(spec, ws.bands_csv());
      manifest.output(ws.bands_csv());
      wrote_bands = true;
    }

    std::vector<Vector> bands_h, bands_v;
    Vector times(static_cast<Index>(set.records.size()));
    for (std::size_t r = 0; r < set.records.size(); ++r) {
      const ingest::Record& rec = set.records[r];
      times[static_cast<Index>(r)] = rec.timestamp_s;
      bands_h.push_back(
          dsp::filter_spectrum(dsp::power_spectrum(rec.horiz, set.sample_rate_hz, window), spec));
      bands_v.push_back(
          dsp::filter_spectrum(dsp::power_spectrum(rec.vert, set.sample_rate_hz, window), spec));
    }
    const preprocess::FeatureMatrix matrix = preprocess::assemble_matrix(bands_h, bands_v, spec);
    const preprocess::NormalizationStats stats =
        preprocess::fit_normalizer(matrix, cfg.fit_fraction);
    const preprocess::FeatureMatrix normalized = preprocess::apply_normalizer(matrix, stats);

    preprocess::write_matrix_csv(normalized, times, ws.matrix_csv(run.id));
    preprocess::write_stats_csv(stats, ws.stats_csv(run.id));
    manifest.output(ws.matrix_csv(run.id));
    manifest.output(ws.stats_csv(run.id));
  }
  manifest.write(ws);
}

void stage_train_ae(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"train-ae", &cfg};
  const std::vector<RunInfo> runs = read_runs(ws, "preprocess");

  std::vector<Matrix> pieces;
  Index rows = -1;
  Index total_cols = 0;
  for (const RunInfo& run : runs) {
    if (run.role == "test" && cfg.ae_pool != "train+test") continue;
    require_artifact(ws.matrix_csv(run.id), "preprocess");
    manifest.input(ws.matrix_csv(run.id));
    preprocess::MatrixWithTimes data = preprocess::read_matrix_csv(ws.matrix_csv(run.id));
    if (rows < 0) rows = data.matrix.rows();
    if (data.matrix.rows() != rows) {
      throw StructuralError("matrix row counts differ across runs");
    }
    total_cols += data.matrix.cols();
    pieces.push_back(std::move(data.matrix.values));
  }
  if (pieces.empty()) {
    throw DependencyError("no matrices to train on; run stage 'preprocess' first");
  }
  Matrix pooled(rows, total_cols);
  Index at = 0;
  for (const Matrix& piece : pieces) {
    pooled.middleCols(at, piece.cols()) = piece;
    at += piece.cols();
  }

  models::AeArch arch;
  arch.input_dim = rows;
  arch.enc_hidden1 = cfg.ae_hidden1;
  arch.enc_hidden2 = cfg.ae_hidden2;
  arch.bottleneck = cfg.ae_bottleneck;
  arch.dec_hidden = cfg.ae_dec_hidden;

  neural::TrainOptions opt = cfg.ae_training.options;
  opt.seed = stage_seed(cfg.seed, "train-ae");

  // Inputs arrive normalized per run, so the embedded stats are identity.
  preprocess::NormalizationStats identity;
  identity.mu = Vector::Zero(rows);
  identity.sigma = Vector::Ones(rows);
  identity.fit_fraction = cfg.fit_fraction;

  std::vector<neural::EpochStats> history;
  const models::AeModel model =
      models::train_autoencoder(pooled, arch, cfg.ae_training.cost, opt, identity, &history);
  models::save_model(model, ws.ae_model(), cfg.config_hash);
  neural::write_history_csv(history, ws.ae_history_csv());
  manifest.output(ws.ae_model());
  manifest.output(ws.ae_history_csv());
  manifest.write(ws);
}

void stage_extract(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"extract", &cfg};
  require_artifact(ws.ae_model(), "train-ae");
  const models::AeModel model = models::load_ae_model(ws.ae_model());
  manifest.input(ws.ae_model());
  for (const RunInfo& run : read_runs(ws, "preprocess")) {
    require_artifact(ws.matrix_csv(run.id), "preprocess");
    manifest.input(ws.matrix_csv(run.id));
    const preprocess::MatrixWithTimes data = preprocess::read_matrix_csv(ws.matrix_csv(run.id));
    const explain::FeatureTrajectory traj =
        explain::reactive_monitor(model, data.matrix, data.times_s);
    explain::write_trajectory_csv(traj, ws.trajectory_csv(run.id));
    manifest.output(ws.trajectory_csv(run.id));
  }
  manifest.write(ws);
}

void stage_changepoint(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"changepoint", &cfg};
  std::vector<std::vector<std::string>> onset_rows;
  for (const RunInfo& run : read_runs(ws, "preprocess")) {
    require_artifact(ws.trajectory_csv(run.id), "extract");
    manifest.input(ws.trajectory_csv(run.id));
    const explain::FeatureTrajectory traj =
        explain::read_trajectory_csv(ws.trajectory_csv(run.id));
    const prognosis::OnsetResult onset =
        prognosis::anomaly_onset(traj, cfg.changepoint_penalty, cfg.changepoint_max_k,
                                 cfg.changepoint_penalty_scale);

    std::vector<std::vector<std::string>> cp_rows;
    for (std::size_t row = 0; row < onset.per_row.size(); ++row) {
      for (Index idx : onset.per_row[row].indices) {
        cp_rows.push_back({"f" + std::to_string(row + 1), std::to_string(idx)});
      }
    }
    io::write_csv(ws.changepoints_csv(run.id), {"feature", "change_point_index"}, cp_rows);
    manifest.output(ws.changepoints_csv(run.id));
    onset_rows.push_back(
        {run.id, std::to_string(onset.onset), onset.detected ? "1" : "0"});
  }
  io::write_csv(ws.onsets_csv(), {"run_id", "onset_index", "detected"}, onset_rows);
  manifest.output(ws.onsets_csv());
  manifest.write(ws);
}

std::map<std::string, std::pair<Index, bool>> read_onsets(const Workspace& ws) {
  require_artifact(ws.onsets_csv(), "changepoint");
  std::map<std::string, std::pair<Index, bool>> onsets;
  for (const auto& row : io::read_csv(ws.onsets_csv()).rows) {
    if (row.size() != 3) {
      throw ParseError("bad onsets.csv row");
    }
    onsets[row[0]] = {io::parse_long(row[1], ws.onsets_csv().string(), 0), row[2] == "1"};
  }
  return onsets;
}

void stage_label(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"label", &cfg};
  const auto onsets = read_onsets(ws);
  manifest.input(ws.onsets_csv());
  for (const RunInfo& run : read_runs(ws, "preprocess")) {
    require_artifact(ws.trajectory_csv(run.id), "extract");
    const explain::FeatureTrajectory traj =
        explain::read_trajectory_csv(ws.trajectory_csv(run.id));
    const Index records = traj.times_s.size();
    if (records < 2) {
      throw StructuralError("run " + run.id + " has fewer than 2 records");
    }
    const double interval = traj.times_s[1] - traj.times_s[0];
    auto it = onsets.find(run.id);
    if (it == onsets.end()) {
      throw DependencyError("no onset recorded for run " + run.id +
                            "; run stage 'changepoint' first");
    }
    const prognosis::RulSeries series = prognosis::label_rul(records, interval, it->second.first);
    prognosis::write_rul_csv(series, ws.labels_csv(run.id));
    manifest.output(ws.labels_csv(run.id));
  }
  manifest.write(ws);
}

void stage_train_ffnn(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"train-ffnn", &cfg};
  std::vector<Matrix> feature_pieces;
  std::vector<Vector> label_pieces;
  double rul_max_s = 0.0;
  Index feature_dim = -1;
  for (const RunInfo& run : read_runs(ws, "preprocess")) {
    if (run.role != "train") continue;
    require_artifact(ws.trajectory_csv(run.id), "extract");
    require_artifact(ws.labels_csv(run.id), "label");
    manifest.input(ws.trajectory_csv(run.id));
    manifest.input(ws.labels_csv(run.id));
    const explain::FeatureTrajectory traj =
        explain::read_trajectory_csv(ws.trajectory_csv(run.id));
    const prognosis::RulSeries labels = prognosis::read_rul_csv(ws.labels_csv(run.id));
    if (labels.normalized_labels.size() != traj.features.cols()) {
      throw StructuralError("labels and trajectory disagree for run " + run.id);
    }
    if (feature_dim < 0) feature_dim = traj.features.rows();
    feature_pieces.push_back(traj.features);
    label_pieces.push_back(labels.normalized_labels);
    rul_max_s = std::max(rul_max_s, labels.rul_max_s);
  }
  if (feature_pieces.empty()) {
    throw DependencyError("no training runs with trajectories; run stage 'extract' first");
  }
  Index total = 0;
  for (const auto& piece : feature_pieces) total += piece.cols();
  Matrix features(feature_dim, total);
  Vector labels(total);
  Index at = 0;
  for (std::size_t i = 0; i < feature_pieces.size(); ++i) {
    features.middleCols(at, feature_pieces[i].cols()) = feature_pieces[i];
    labels.segment(at, label_pieces[i].size()) = label_pieces[i];
    at += feature_pieces[i].cols();
  }

  models::FfnnArch arch;
  arch.input_dim = feature_dim;
  arch.hidden1 = cfg.ffnn_hidden1;
  arch.hidden2 = cfg.ffnn_hidden2;

  neural::TrainOptions opt = cfg.ffnn_training.options;
  opt.seed = stage_seed(cfg.seed, "train-ffnn");

  std::vector<neural::EpochStats> history;
  const models::FfnnModel model = models::train_ffnn(features, labels, arch,
                                                     cfg.ffnn_training.cost, opt, rul_max_s,
                                                     &history);
  models::save_model(model, ws.ffnn_model(), cfg.config_hash);
  neural::write_history_csv(history, ws.ffnn_history_csv());
  manifest.output(ws.ffnn_model());
  manifest.output(ws.ffnn_history_csv());
  manifest.write(ws);
}

void stage_estimate(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"estimate", &cfg};
  require_artifact(ws.ffnn_model(), "train-ffnn");
  const models::FfnnModel model = models::load_ffnn_model(ws.ffnn_model());
  manifest.input(ws.ffnn_model());
  for (const RunInfo& run : read_runs(ws, "preprocess")) {
    require_artifact(ws.trajectory_csv(run.id), "extract");
    require_artifact(ws.labels_csv(run.id), "label");
    manifest.input(ws.trajectory_csv(run.id));
    manifest.input(ws.labels_csv(run.id));
    const explain::FeatureTrajectory traj =
        explain::read_trajectory_csv(ws.trajectory_csv(run.id));
    prognosis::RulSeries series = prognosis::read_rul_csv(ws.labels_csv(run.id));
    for (Index j = 0; j < traj.features.cols(); ++j) {
      series.est_rul_s[j] = models::estimate_rul(model, traj.features.col(j)).seconds;
    }
    prognosis::write_rul_csv(series, ws.rul_csv(run.id));
    manifest.output(ws.rul_csv(run.id));
  }
  manifest.write(ws);
}

void stage_explain(const PipelineConfig& cfg, const Workspace& ws) {
  Manifest manifest{"explain", &cfg};
  require_artifact(ws.ae_model(), "train-ae");
  require_artifact(ws.ffnn_model(), "train-ffnn");
  const models::AeModel ae = models::load_ae_model(ws.ae_model());
  const models::FfnnModel ffnn = models::load_ffnn_model(ws.ffnn_model());
  manifest.input(ws.ae_model());
  manifest.input(ws.ffnn_model());

  const std::vector<RunInfo> runs = read_runs(ws, "preprocess");
  std::string run_id = cfg.explain_run.empty() ? runs.front().id : cfg.explain_run;
  const auto run_it =
      std::find_if(runs.begin(), runs.end(), [&](const RunInfo& r) { return r.id == run_id; });
  if (run_it == runs.end()) {
    throw ConfigError("[explain] run '" + run_id + "' is not a known run id");
  }
  require_artifact(ws.matrix_csv(run_id), "preprocess");
  manifest.input(ws.matrix_csv(run_id));
  const preprocess::MatrixWithTimes data = preprocess::read_matrix_csv(ws.matrix_csv(run_id));

  // Importance of each bottleneck feature for the RUL estimate.
  explain::write_importance_csv(explain::connection_weight_importance(ffnn.net),
                                ws.importance_csv());
  manifest.output(ws.importance_csv());

  // Injection sweeps, one file per feature.
  const Index steps =
      static_cast<Index>(std::floor((cfg.sweep_max - cfg.sweep_min) / cfg.sweep_step + 0.5)) + 1;
  Vector sweep(steps);
  for (Index i = 0; i < steps; ++i) sweep[i] = cfg.sweep_min + cfg.sweep_step * i;
  for (Index k = 0; k < ae.bottleneck_dim; ++k) {
    const explain::InjectionGrid grid = explain::inject_features(ae, k, sweep);
    explain::write_injection_csv(grid, data.matrix.row_labels, ws.injection_csv(k));
    manifest.output(ws.injection_csv(k));
  }

  // Characteristic-frequency annotation of the band layout.
  {
    require_artifact(run_it->records_dir / "meta.txt", "preprocess");
    const ingest::RecordFormat fmt =
        ingest::load_record_format(run_it->records_dir / "meta.txt");
    const dsp::OctaveBandSpec spec =
        dsp::band_edges(cfg.band_m, cfg.band_n, fmt.sample_rate_hz / 2.0);
    const explain::CharacteristicFrequencies freq =
        explain::characteristic_frequencies(cfg.bearing);
    const explain::AnnotationResult notes = explain::annotate_bands(
        spec,
        {{"BPFO", freq.bpfo}, {"BPFI", freq.bpfi}, {"BSF", freq.bsf}, {"FTF", freq.ftf}},
        cfg.harmonics);
    explain::write_annotations_csv(notes, spec, ws.annotations_csv());
    manifest.output(ws.annotations_csv());
  }

  explain::write_spectrogram_pgm(data.matrix.values, ws.spectrogram_pgm());
  manifest.output(ws.spectrogram_pgm());
  manifest.write(ws);
}

void evaluate_series(const PipelineConfig& cfg, const Workspace& ws, bool linear,
                     const std::string& stage_name) {
  Manifest manifest{stage_name, &cfg};
  const std::vector<RunInfo> runs = read_runs(ws, "preprocess");

  prognosis::LinearModel linear_model;
  if (linear) {
    // Least-squares baseline on the training features.
    std::vector<Matrix> feature_pieces;
    std::vector<Vector> label_pieces;
    for (const RunInfo& run : runs) {
      if (run.role != "train") continue;
      require_artifact(ws.trajectory_csv(run.id), "extract");
      require_artifact(ws.labels_csv(run.id), "label");
      const explain::FeatureTrajectory traj =
          explain::read_trajectory_csv(ws.trajectory_csv(run.id));
      const prognosis::RulSeries labels = prognosis::read_rul_csv(ws.labels_csv(run.id));
      feature_pieces.push_back(traj.features);
      label_pieces.push_back(labels.normalized_labels);
    }
    if (feature_pieces.empty()) {
      throw DependencyError("no training trajectories; run stage 'extract' first");
    }
    Index total = 0;
    for (const auto& piece : feature_pieces) total += piece.cols();
    Matrix features(feature_pieces.front().rows(), total);
    Vector labels(total);
    Index at = 0;
    for (std::size_t i = 0; i < feature_pieces.size(); ++i) {
      features.middleCols(at, feature_pieces[i].cols()) = feature_pieces[i];
      labels.segment(at, label_pieces[i].size()) = label_pieces[i];
      at += feature_pieces[i].cols();
    }
    linear_model = prognosis::fit_linear_baseline(features, labels);
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < linear_model.weights.size(); ++i) {
      rows.push_back({"f" + std::to_string(i + 1), io::format_double(linear_model.weights[i])});
    }
    rows.push_back({"intercept", io::format_double(linear_model.intercept)});
    io::write_csv(ws.linear_model_csv(), {"term", "value"}, rows);
    manifest.output(ws.linear_model_csv());
  }

  double rul_scale = 0.0;
  if (linear) {
    require_artifact(ws.ffnn_model(), "train-ffnn");
    rul_scale = models::load_ffnn_model(ws.ffnn_model()).rul_max_s;
  }

  std::vector<std::vector<std::string>> metric_rows;
  for (const RunInfo& run : runs) {
    if (cfg.evaluate_runs != "all" && run.role != cfg.evaluate_runs) continue;
    prognosis::RulSeries series;
    if (linear) {
      require_artifact(ws.trajectory_csv(run.id), "extract");
      require_artifact(ws.labels_csv(run.id), "label");
      manifest.input(ws.trajectory_csv(run.id));
      const explain::FeatureTrajectory traj =
          explain::read_trajectory_csv(ws.trajectory_csv(run.id));
      series = prognosis::read_rul_csv(ws.labels_csv(run.id));
      const Vector normalized = prognosis::predict_linear(linear_model, traj.features);
      for (Index j = 0; j < normalized.size(); ++j) {
        series.est_rul_s[j] = normalized[j] * rul_scale;
      }
    } else {
      require_artifact(ws.rul_csv(run.id), "estimate");
      manifest.input(ws.rul_csv(run.id));
      series = prognosis::read_rul_csv(ws.rul_csv(run.id));
    }
    const double err = prognosis::rmse(series.true_rul_s, series.est_rul_s);
    const double re = prognosis::relative_error(series.true_rul_s, series.est_rul_s);
    metric_rows.push_back({run.id, io::format_double(err), io::format_double(re)});
  }
  const fs::path target = linear ? ws.metrics_linear_csv() : ws.metrics_csv();
  io::write_csv(target, {"run_id", "rmse_s", "re"}, metric_rows);
  manifest.output(target);
  manifest.write(ws);
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "synth",      "preprocess", "train-ae", "extract",  "changepoint",     "label",
      "train-ffnn", "estimate",   "explain",  "evaluate", "baseline-linear",
  };
  return names;
}

std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage) {
  return global_seed ^ fnv1a64(stage);
}

void run_stage(const PipelineConfig& cfg, const std::string& stage) {
  Workspace ws{cfg.out_dir};
  fs::create_directories(ws.out);
  LockGuard lock(ws.lock_file());

  auto dispatch = [&](const std::string& name) {
    if (name == "synth") {
      stage_synth(cfg, ws);
    } else if (name == "preprocess") {
      stage_preprocess(cfg, ws);
    } else if (name == "train-ae") {
      stage_train_ae(cfg, ws);
    } else if (name == "extract") {
      stage_extract(cfg, ws);
    } else if (name == "changepoint") {
      stage_changepoint(cfg, ws);
    } else if (name == "label") {
      stage_label(cfg, ws);
    } else if (name == "train-ffnn") {
      stage_train_ffnn(cfg, ws);
    } else if (name == "estimate") {
      stage_estimate(cfg, ws);
    } else if (name == "explain") {
      stage_explain(cfg, ws);
    } else if (name == "evaluate") {
      evaluate_series(cfg, ws, false, "evaluate");
    } else if (name == "baseline-linear") {
      evaluate_series(cfg, ws, true, "baseline-linear");
    } else {
      throw ConfigError("unknown stage '" + name + "'");
    }
  };

  if (stage == "all") {
    for (const std::string& name : stage_names()) {
      if (name == "synth" && cfg.source != "synth") continue;
      dispatch(name);
    }
  } else {
    dispatch(stage);
  }
}

}  // namespace obrul::cli
