#include "obrul/prognosis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"

namespace obrul::prognosis {

namespace {

/// Prefix sums giving O(1) within-segment squared deviation around the mean.
struct SegmentCost {
  std::vector<double> sum;
  std::vector<double> sum_sq;

  explicit SegmentCost(VectorRef series) {
    const std::size_t n = static_cast<std::size_t>(series.size());
    sum.assign(n + 1, 0.0);
    sum_sq.assign(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      sum[t + 1] = sum[t] + series[static_cast<Index>(t)];
      sum_sq[t + 1] = sum_sq[t] + series[static_cast<Index>(t)] * series[static_cast<Index>(t)];
    }
  }

  /// Cost of the half-open segment [a, b).
  double operator()(Index a, Index b) const {
    const double s = sum[static_cast<std::size_t>(b)] - sum[static_cast<std::size_t>(a)];
    const double ss = sum_sq[static_cast<std::size_t>(b)] - sum_sq[static_cast<std::size_t>(a)];
    const double len = static_cast<double>(b - a);
    return std::max(0.0, ss - s * s / len);
  }
};

}  // namespace

ChangePointResult detect_change_points(VectorRef series, Index max_k, double penalty) {
  const Index len = series.size();
  if (len < 4) {
    throw ArgumentError("change-point detection needs at least 4 samples");
  }
  if (max_k < 1) {
    throw ArgumentError("max_k must be >= 1");
  }
  if (!(penalty > 0.0)) {
    throw ArgumentError("penalty must be positive");
  }
  const SegmentCost cost(series);
  const Index kmax = std::min<Index>(max_k, len - 1);

  // best[k][t]: minimal within-segment cost of covering [0, t) with k
  // boundaries (k+1 segments).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(static_cast<std::size_t>(kmax) + 1,
                                        std::vector<double>(static_cast<std::size_t>(len) + 1, inf));
  std::vector<std::vector<Index>> arg(static_cast<std::size_t>(kmax) + 1,
                                      std::vector<Index>(static_cast<std::size_t>(len) + 1, 0));
  for (Index t = 1; t <= len; ++t) {
    best[0][static_cast<std::size_t>(t)] = cost(0, t);
  }
  for (Index k = 1; k <= kmax; ++k) {
    for (Index t = k + 1; t <= len; ++t) {
      double b = inf;
      Index bs = 0;
      for (Index s = k; s < t; ++s) {
        const double c = best[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(s)] +
                         cost(s, t);
        if (c < b) {
          b = c;
          bs = s;
        }
      }
      best[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] = b;
      arg[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] = bs;
    }
  }

  Index best_k = 0;
  double best_j = best[0][static_cast<std::size_t>(len)];
  for (Index k = 1; k <= kmax; ++k) {
    const double j = best[static_cast<std::size_t>(k)][static_cast<std::size_t>(len)] +
                     penalty * static_cast<double>(k);
    if (j < best_j) {
      best_j = j;
      best_k = k;
    }
  }

  ChangePointResult result;
  result.contrast = best_j;
  result.indices.resize(static_cast<std::size_t>(best_k));
  Index t = len;
  for (Index k = best_k; k >= 1; --k) {
    t = arg[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
    result.indices[static_cast<std::size_t>(k - 1)] = t;
  }
  return result;
}

double default_penalty(VectorRef series) {
  const Index len = series.size();
  double acc = 0.0;
  for (Index t = 1; t < len; ++t) {
    const double d = series[t] - series[t - 1];
    acc += d * d;
  }
  const double sigma_sq = len > 1 ? acc / (2.0 * static_cast<double>(len - 1)) : 0.0;
  const double floor = 1e-12;
  return std::max(2.0 * sigma_sq * std::log(static_cast<double>(len)), floor);
}

OnsetResult anomaly_onset(const explain::FeatureTrajectory& trajectory, double penalty,
                          Index max_k, double penalty_scale) {
  if (trajectory.features.cols() == 0) {
    throw ArgumentError("trajectory is empty");
  }
  if (!(penalty_scale > 0.0)) {
    throw ArgumentError("penalty_scale must be positive");
  }
  OnsetResult result;
  for (Index row = 0; row < trajectory.features.rows(); ++row) {
    const Vector series = trajectory.features.row(row).transpose();
    const double pen =
        penalty > 0.0 ? penalty : penalty_scale * default_penalty(series);
    ChangePointResult cp = detect_change_points(series, max_k, pen);
    if (!cp.indices.empty()) {
      result.detected = true;
      result.onset = std::max(result.onset, cp.indices.back());
    }
    result.per_row.push_back(std::move(cp));
  }
  return result;
}

RulSeries label_rul(Index record_count, double record_interval_s, Index anomaly_index) {
  if (anomaly_index < 0 || anomaly_index >= record_count) {
    throw ArgumentError("anomaly index out of range");
  }
  if (anomaly_index == record_count - 1) {
    throw ArgumentError("anomaly at the final record leaves a zero label range");
  }
  RulSeries series;
  series.anomaly_index = anomaly_index;
  series.rul_max_s =
      static_cast<double>(record_count - 1 - anomaly_index) * record_interval_s;
  series.times_s.resize(record_count);
  series.true_rul_s.resize(record_count);
  series.normalized_labels.resize(record_count);
  series.est_rul_s = Vector::Zero(record_count);
  for (Index j = 0; j < record_count; ++j) {
    series.times_s[j] = static_cast<double>(j) * record_interval_s;
    const double raw = static_cast<double>(record_count - 1 - j) * record_interval_s;
    series.true_rul_s[j] = std::min(raw, series.rul_max_s);
    series.normalized_labels[j] = series.true_rul_s[j] / series.rul_max_s;
  }
  return series;
}

double rmse(VectorRef truth, VectorRef estimate) {
  if (truth.size() != estimate.size() || truth.size() == 0) {
    throw ArgumentError("rmse requires equal-length, non-empty series");
  }
  return std::sqrt((truth - estimate).squaredNorm() / static_cast<double>(truth.size()));
}

double relative_error(VectorRef true_s, VectorRef est_s, Index eval_index) {
  if (true_s.size() != est_s.size() || true_s.size() == 0) {
    throw ArgumentError("relative error requires equal-length, non-empty series");
  }
  Index idx = eval_index;
  if (idx < 0) {
    idx = -1;
    for (Index j = true_s.size(); j-- > 0;) {
      if (true_s[j] > 0.0) {
        idx = j;
        break;
      }
    }
    if (idx < 0) {
      throw ArgumentError("no point with positive true RUL");
    }
  }
  if (idx >= true_s.size()) {
    throw ArgumentError("evaluation index out of range");
  }
  const double actual = true_s[idx];
  if (actual == 0.0) {
    throw ArgumentError("relative error undefined: actual RUL is 0 at the evaluation instant");
  }
  return (actual - est_s[idx]) / actual;
}

LinearModel fit_linear_baseline(MatrixRef features, VectorRef labels) {
  const Index dim = features.rows();
  const Index count = features.cols();
  if (count != labels.size()) {
    throw ArgumentError("feature and label counts differ");
  }
  if (count < dim + 1) {
    throw ArgumentError("need at least dim + 1 samples for the linear baseline");
  }
  // Design matrix with a trailing intercept column.
  Matrix design(count, dim + 1);
  design.leftCols(dim) = features.transpose();
  design.col(dim).setOnes();

  const Matrix normal = design.transpose() * design;
  const Vector rhs = design.transpose() * labels;
  Vector solution = normal.ldlt().solve(rhs);
  const double residual = (normal * solution - rhs).norm();
  if (!solution.allFinite() || residual > 1e-6 * std::max(1.0, rhs.norm())) {
    Matrix ridged = normal;
    ridged.diagonal().array() += 1e-8;
    solution = ridged.ldlt().solve(rhs);
  }
  LinearModel model;
  model.weights = solution.head(dim);
  model.intercept = solution[dim];
  return model;
}

Vector predict_linear(const LinearModel& model, MatrixRef features) {
  if (features.rows() != model.weights.size()) {
    throw StructuralError("feature dimension does not match the linear model");
  }
  return (features.transpose() * model.weights).array() + model.intercept;
}

void write_rul_csv(const RulSeries& series, const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (Index j = 0; j < series.times_s.size(); ++j) {
    rows.push_back({io::format_double(series.times_s[j]),
                    io::format_double(series.true_rul_s[j]),
                    io::format_double(series.est_rul_s[j]),
                    io::format_double(series.normalized_labels[j])});
  }
  io::write_csv(path, {"time_s", "true_rul_s", "est_rul_s", "normalized_label"}, rows);
}

RulSeries read_rul_csv(const fs::path& path) {
  const io::CsvTable table = io::read_csv(path);
  const Index count = static_cast<Index>(table.rows.size());
  RulSeries series;
  series.times_s.resize(count);
  series.true_rul_s.resize(count);
  series.est_rul_s.resize(count);
  series.normalized_labels.resize(count);
  for (Index j = 0; j < count; ++j) {
    const auto& row = table.rows[static_cast<std::size_t>(j)];
    if (row.size() != 4) {
      throw ParseError("wrong column count at " + path.string() + ":" + std::to_string(j + 2));
    }
    series.times_s[j] = io::parse_double(row[0], path.string(), j + 2);
    series.true_rul_s[j] = io::parse_double(row[1], path.string(), j + 2);
    series.est_rul_s[j] = io::parse_double(row[2], path.string(), j + 2);
    series.normalized_labels[j] = io::parse_double(row[3], path.string(), j + 2);
  }
  series.rul_max_s = count > 0 ? series.true_rul_s.maxCoeff() : 0.0;
  return series;
}

}  // namespace obrul::prognosis
