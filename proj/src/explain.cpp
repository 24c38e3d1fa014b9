#include "obrul/explain.hpp"

#include <algorithm>
#include <cmath>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"

namespace obrul::explain {

FeatureTrajectory reactive_monitor(const models::AeModel& model,
                                   const preprocess::FeatureMatrix& normalized,
                                   VectorRef times_s) {
  if (normalized.rows() != model.encoder.input_dim()) {
    throw StructuralError("matrix has " + std::to_string(normalized.rows()) +
                          " rows, encoder expects " +
                          std::to_string(model.encoder.input_dim()));
  }
  if (times_s.size() != normalized.cols()) {
    throw StructuralError("times length does not match record count");
  }
  FeatureTrajectory traj;
  traj.times_s = times_s;
  traj.features = models::encode_all(model, normalized.values);
  return traj;
}

Vector default_sweep() {
  Vector sweep(9);
  for (Index i = 0; i < 9; ++i) sweep[i] = -1.0 + 0.5 * static_cast<double>(i);
  return sweep;
}

InjectionGrid inject_features(const models::AeModel& model, Index feature_index,
                              VectorRef sweep, const Vector& baseline) {
  if (feature_index < 0 || feature_index >= model.bottleneck_dim) {
    throw RangeError("feature index " + std::to_string(feature_index) +
                     " out of range for bottleneck of " +
                     std::to_string(model.bottleneck_dim));
  }
  Vector base = baseline.size() == 0 ? Vector::Zero(model.bottleneck_dim) : Vector(baseline);
  if (base.size() != model.bottleneck_dim) {
    throw StructuralError("baseline length does not match bottleneck");
  }
  InjectionGrid grid;
  grid.feature_index = feature_index;
  grid.sweep_values = sweep;
  grid.reconstructions.resize(model.decoder.output_dim(), sweep.size());
  for (Index s = 0; s < sweep.size(); ++s) {
    Vector features = base;
    features[feature_index] = sweep[s];
    grid.reconstructions.col(s) = models::decode(model, features);
  }
  return grid;
}

Vector connection_weight_importance(const neural::Network& net) {
  if (net.layer_count() == 0) {
    throw StructuralError("network has no layers");
  }
  // Recursive rule FI_i^l = sum_j FI_j^{l+1} * w^l(j, i), seeded with ones at
  // the output layer.
  Vector fi = Vector::Ones(net.output_dim());
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    fi = net.weights[l].transpose() * fi;
  }
  return fi;
}

CharacteristicFrequencies characteristic_frequencies(const BearingGeometry& geom) {
  if (geom.n_balls < 3 || geom.ball_diameter <= 0.0 ||
      geom.ball_diameter >= geom.pitch_diameter) {
    throw ArgumentError("bearing geometry requires n_balls >= 3 and ball < pitch diameter");
  }
  const double ratio = geom.ball_diameter / geom.pitch_diameter;
  const double cos_term = ratio * std::cos(geom.contact_angle_rad);
  const double n = static_cast<double>(geom.n_balls);
  CharacteristicFrequencies f;
  f.ftf = 0.5 * geom.shaft_hz * (1.0 - cos_term);
  f.bpfo = n * f.ftf;
  f.bpfi = 0.5 * n * geom.shaft_hz * (1.0 + cos_term);
  f.bsf = (geom.shaft_hz / (2.0 * ratio)) * (1.0 - cos_term * cos_term);
  return f;
}

AnnotationResult annotate_bands(const dsp::OctaveBandSpec& spec,
                                const std::vector<std::pair<std::string, double>>& freqs,
                                int harmonics) {
  AnnotationResult result;
  for (const auto& [name, hz] : freqs) {
    for (int h = 1; h <= std::max(1, harmonics); ++h) {
      BandAnnotation note;
      note.freq_hz = hz * static_cast<double>(h);
      note.label = std::to_string(h) + " X " + name;
      note.band_index = spec.band_of(note.freq_hz);
      if (note.band_index >= 0) {
        result.mapped.push_back(note);
      } else {
        result.unmapped.push_back(note);
      }
    }
  }
  return result;
}

void write_trajectory_csv(const FeatureTrajectory& traj, const fs::path& path) {
  std::vector<std::string> header{"time_s"};
  for (Index i = 0; i < traj.features.rows(); ++i) {
    header.push_back("f" + std::to_string(i + 1));
  }
  std::vector<std::vector<std::string>> rows;
  for (Index j = 0; j < traj.features.cols(); ++j) {
    std::vector<std::string> row{io::format_double(traj.times_s[j])};
    for (Index i = 0; i < traj.features.rows(); ++i) {
      row.push_back(io::format_double(traj.features(i, j)));
    }
    rows.push_back(std::move(row));
  }
  io::write_csv(path, header, rows);
}

FeatureTrajectory read_trajectory_csv(const fs::path& path) {
  const io::CsvTable table = io::read_csv(path);
  if (table.header.size() < 2 || table.header[0] != "time_s") {
    throw ParseError("bad trajectory header in " + path.string());
  }
  const Index features = static_cast<Index>(table.header.size()) - 1;
  const Index cols = static_cast<Index>(table.rows.size());
  FeatureTrajectory traj;
  traj.times_s.resize(cols);
  traj.features.resize(features, cols);
  for (Index j = 0; j < cols; ++j) {
    const auto& row = table.rows[static_cast<std::size_t>(j)];
    if (static_cast<Index>(row.size()) != features + 1) {
      throw ParseError("wrong column count at " + path.string() + ":" + std::to_string(j + 2));
    }
    traj.times_s[j] = io::parse_double(row[0], path.string(), j + 2);
    for (Index i = 0; i < features; ++i) {
      traj.features(i, j) =
          io::parse_double(row[static_cast<std::size_t>(i) + 1], path.string(), j + 2);
    }
  }
  return traj;
}

void write_injection_csv(const InjectionGrid& grid,
                         const std::vector<preprocess::RowLabel>& row_labels,
                         const fs::path& path) {
  std::vector<std::string> header{"row_label"};
  for (Index s = 0; s < grid.sweep_values.size(); ++s) {
    header.push_back(io::format_double(grid.sweep_values[s]));
  }
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < grid.reconstructions.rows(); ++i) {
    std::vector<std::string> row;
    row.push_back(i < static_cast<Index>(row_labels.size())
                      ? row_labels[static_cast<std::size_t>(i)].str()
                      : "row" + std::to_string(i));
    for (Index s = 0; s < grid.reconstructions.cols(); ++s) {
      row.push_back(io::format_double(grid.reconstructions(i, s)));
    }
    rows.push_back(std::move(row));
  }
  io::write_csv(path, header, rows);
}

void write_importance_csv(VectorRef importance, const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < importance.size(); ++i) {
    rows.push_back({"f" + std::to_string(i + 1), io::format_double(importance[i])});
  }
  io::write_csv(path, {"feature", "value"}, rows);
}

void write_annotations_csv(const AnnotationResult& result, const dsp::OctaveBandSpec& spec,
                           const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const BandAnnotation& a : result.mapped) {
    rows.push_back({std::to_string(a.band_index), io::format_double(spec.band_low(a.band_index)),
                    io::format_double(spec.band_high(a.band_index)), a.label});
  }
  for (const BandAnnotation& a : result.unmapped) {
    rows.push_back({"-1", "nan", "nan", a.label});
  }
  io::write_csv(path, {"band_index", "f_low_hz", "f_high_hz", "label"}, rows);
}

void write_spectrogram_pgm(MatrixRef values, const fs::path& path, double vmin, double vmax) {
  std::string out = "P5\n" + std::to_string(values.cols()) + " " +
                    std::to_string(values.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      const double t = std::clamp((values(i, j) - vmin) / (vmax - vmin), 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
  }
  io::write_text_file(path, out);
}

}  // namespace obrul::explain
