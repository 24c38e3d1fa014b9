#pragma once

#include <string>
#include <vector>

#include "obrul/config.hpp"

namespace obrul::cli {

/// Stage names in canonical execution order.
const std::vector<std::string>& stage_names();

/// Runs one stage (or "all"), writing artifacts plus a manifest under the
/// workspace. Throws ConfigError / DependencyError / DivergenceError.
void run_stage(const PipelineConfig& cfg, const std::string& stage);

/// Artifact locations inside a workspace.
struct Workspace {
  fs::path out;

  fs::path runs_csv() const { return out / "runs.csv"; }
  fs::path run_dir(const std::string& id) const { return out / "runs" / id; }
  fs::path records_dir(const std::string& id) const { return run_dir(id) / "records"; }
  fs::path matrix_csv(const std::string& id) const { return run_dir(id) / "matrix.csv"; }
  fs::path stats_csv(const std::string& id) const { return run_dir(id) / "norm_stats.csv"; }
  fs::path trajectory_csv(const std::string& id) const { return run_dir(id) / "trajectory.csv"; }
  fs::path changepoints_csv(const std::string& id) const {
    return run_dir(id) / "changepoints.csv";
  }
  fs::path labels_csv(const std::string& id) const { return run_dir(id) / "labels.csv"; }
  fs::path rul_csv(const std::string& id) const { return run_dir(id) / "rul.csv"; }

  fs::path bands_csv() const { return out / "bands.csv"; }
  fs::path onsets_csv() const { return out / "onsets.csv"; }
  fs::path ae_model() const { return out / "ae.model"; }
  fs::path ae_history_csv() const { return out / "ae_loss.csv"; }
  fs::path ffnn_model() const { return out / "ffnn.model"; }
  fs::path ffnn_history_csv() const { return out / "ffnn_loss.csv"; }
  fs::path metrics_csv() const { return out / "metrics.csv"; }
  fs::path metrics_linear_csv() const { return out / "metrics_linear.csv"; }
  fs::path linear_model_csv() const { return out / "linear_model.csv"; }
  fs::path importance_csv() const { return out / "importance.csv"; }
  fs::path injection_csv(Index feature) const {
    return out / ("injection_" + std::to_string(feature + 1) + ".csv");
  }
  fs::path annotations_csv() const { return out / "annotations.csv"; }
  fs::path spectrogram_pgm() const { return out / "spectrogram.pgm"; }
  fs::path manifest(const std::string& stage) const {
    return out / "manifests" / (stage + ".manifest");
  }
  fs::path lock_file() const { return out / ".lock"; }
};

/// Derived per-stage seed: global seed folded with the stage name.
std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage);

}  // namespace obrul::cli
