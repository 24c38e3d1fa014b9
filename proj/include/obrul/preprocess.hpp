#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "obrul/dsp.hpp"
#include "obrul/types.hpp"

namespace obrul::preprocess {

namespace fs = std::filesystem;

struct RowLabel {
  char channel = '?';  // 'H' or 'V'
  double f_low_hz = 0.0;
  double f_high_hz = 0.0;

  std::string str() const;
  static RowLabel parse(const std::string& text);
};

/// Columns are records; rows are the horizontal band values (dB) stacked
/// above the vertical ones.
struct FeatureMatrix {
  Matrix values;
  std::vector<RowLabel> row_labels;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

struct NormalizationStats {
  Vector mu;
  Vector sigma;  // epsilon-clamped, always > 0
  double fit_fraction = 0.8;
};

/// Stacks per-record band vectors into a matrix, converting to decibels.
FeatureMatrix assemble_matrix(const std::vector<Vector>& band_vectors_h,
                              const std::vector<Vector>& band_vectors_v,
                              const dsp::OctaveBandSpec& spec);

/// Per-row mean and population standard deviation over the first
/// floor(fit_fraction * cols) columns; sigma clamped at 1e-9.
NormalizationStats fit_normalizer(const FeatureMatrix& matrix, double fit_fraction = 0.8);

FeatureMatrix apply_normalizer(const FeatureMatrix& matrix, const NormalizationStats& stats);

inline constexpr double kSigmaFloor = 1e-9;

/// CSV layout: header row_label,<t0>,<t1>,...; one row per matrix row.
void write_matrix_csv(const FeatureMatrix& matrix, VectorRef times_s, const fs::path& path);
struct MatrixWithTimes {
  FeatureMatrix matrix;
  Vector times_s;
};
MatrixWithTimes read_matrix_csv(const fs::path& path);

void write_stats_csv(const NormalizationStats& stats, const fs::path& path);
NormalizationStats read_stats_csv(const fs::path& path);

}  // namespace obrul::preprocess
