#pragma once

#include <filesystem>
#include <vector>

#include "obrul/explain.hpp"
#include "obrul/types.hpp"

namespace obrul::prognosis {

namespace fs = std::filesystem;

/// Segment boundaries found by penalized mean-shift segmentation. A boundary
/// b splits [0, b) from [b, len); indices lie in [1, len - 1].
struct ChangePointResult {
  std::vector<Index> indices;
  double contrast = 0.0;  // achieved penalized cost J
};

/// Exact dynamic program minimizing
///   J = sum over segments of within-segment squared deviation + penalty * K
/// over 0 <= K <= max_k change points. O(max_k * len^2).
ChangePointResult detect_change_points(VectorRef series, Index max_k, double penalty);

/// 2 * sigma^2 * log(len) with sigma^2 estimated from first differences.
double default_penalty(VectorRef series);

struct OnsetResult {
  Index onset = 0;
  bool detected = false;
  std::vector<ChangePointResult> per_row;
};

/// Latest change point across the feature rows; penalty <= 0 selects the
/// default penalty per row, multiplied by penalty_scale. Rows whose best
/// segmentation keeps no change point do not vote.
OnsetResult anomaly_onset(const explain::FeatureTrajectory& trajectory, double penalty,
                          Index max_k, double penalty_scale = 1.0);

struct RulSeries {
  Vector times_s;
  Vector true_rul_s;
  Vector est_rul_s;          // zero-filled until estimates are attached
  Vector normalized_labels;  // true_rul_s / rul_max_s
  Index anomaly_index = 0;
  double rul_max_s = 0.0;
};

/// Backward-counted RUL truncated at the anomaly record and rescaled to [0, 1].
RulSeries label_rul(Index record_count, double record_interval_s, Index anomaly_index);

double rmse(VectorRef truth, VectorRef estimate);

/// (actual - estimated) / actual at eval_index; eval_index -1 picks the last
/// point with positive true RUL. Throws ArgumentError when actual is 0 there.
double relative_error(VectorRef true_s, VectorRef est_s, Index eval_index = -1);

struct LinearModel {
  Vector weights;
  double intercept = 0.0;
};

/// Ordinary least squares via normal equations; falls back to a 1e-8 ridge
/// on singular systems. Features are columns of `features`.
LinearModel fit_linear_baseline(MatrixRef features, VectorRef labels);
Vector predict_linear(const LinearModel& model, MatrixRef features);

/// CSV export: time_s,true_rul_s,est_rul_s,normalized_label.
void write_rul_csv(const RulSeries& series, const fs::path& path);
RulSeries read_rul_csv(const fs::path& path);

}  // namespace obrul::prognosis
