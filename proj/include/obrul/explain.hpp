#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "obrul/dsp.hpp"
#include "obrul/models.hpp"
#include "obrul/preprocess.hpp"
#include "obrul/types.hpp"

namespace obrul::explain {

namespace fs = std::filesystem;

/// Bottleneck feature values over a run; column j is encode(matrix column j).
struct FeatureTrajectory {
  Vector times_s;
  Matrix features;  // bottleneck_dim x record count
};

FeatureTrajectory reactive_monitor(const models::AeModel& model,
                                   const preprocess::FeatureMatrix& normalized,
                                   VectorRef times_s);

/// Reconstructions from sweeping one bottleneck feature while the others sit
/// at the baseline (zeros by default).
struct InjectionGrid {
  Index feature_index = 0;
  Vector sweep_values;
  Matrix reconstructions;  // input_dim x sweep length
};

Vector default_sweep();  // -1 to 3 in steps of 0.5

InjectionGrid inject_features(const models::AeModel& model, Index feature_index,
                              VectorRef sweep, const Vector& baseline = Vector());

/// Signed per-input relevance: the product of the layer weight matrices
/// seeded at the output, ignoring activations and biases.
Vector connection_weight_importance(const neural::Network& net);

struct BearingGeometry {
  int n_balls = 0;
  double ball_diameter = 0.0;   // same unit as pitch_diameter
  double pitch_diameter = 0.0;
  double contact_angle_rad = 0.0;
  double shaft_hz = 0.0;
};

struct CharacteristicFrequencies {
  double bpfo = 0.0;
  double bpfi = 0.0;
  double bsf = 0.0;
  double ftf = 0.0;
};

CharacteristicFrequencies characteristic_frequencies(const BearingGeometry& geom);

struct BandAnnotation {
  Index band_index = -1;  // -1: above the last band edge
  std::string label;
  double freq_hz = 0.0;
};

struct AnnotationResult {
  std::vector<BandAnnotation> mapped;
  std::vector<BandAnnotation> unmapped;
};

/// Maps each frequency and its harmonics 1..harmonics to the band holding it
/// (upper-edge-inclusive). Labels read "<k> X <name>".
AnnotationResult annotate_bands(const dsp::OctaveBandSpec& spec,
                                const std::vector<std::pair<std::string, double>>& freqs,
                                int harmonics);

void write_trajectory_csv(const FeatureTrajectory& traj, const fs::path& path);
FeatureTrajectory read_trajectory_csv(const fs::path& path);
void write_injection_csv(const InjectionGrid& grid,
                         const std::vector<preprocess::RowLabel>& row_labels,
                         const fs::path& path);
void write_importance_csv(VectorRef importance, const fs::path& path);
void write_annotations_csv(const AnnotationResult& result, const dsp::OctaveBandSpec& spec,
                           const fs::path& path);

/// 8-bit binary graymap of a matrix, values clamped to [vmin, vmax].
void write_spectrogram_pgm(MatrixRef values, const fs::path& path, double vmin = -2.0,
                           double vmax = 2.0);

}  // namespace obrul::explain
