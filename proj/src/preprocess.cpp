#include "obrul/preprocess.hpp"

#include <cmath>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"

namespace obrul::preprocess {

std::string RowLabel::str() const {
  return std::string(1, channel) + ":" + io::format_double(f_low_hz) + ":" +
         io::format_double(f_high_hz);
}

RowLabel RowLabel::parse(const std::string& text) {
  const std::size_t c1 = text.find(':');
  const std::size_t c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 != 1 || c2 == std::string::npos) {
    throw ParseError("bad row label '" + text + "'");
  }
  RowLabel label;
  label.channel = text[0];
  label.f_low_hz = io::parse_double(text.substr(2, c2 - 2), "row label", 0);
  label.f_high_hz = io::parse_double(text.substr(c2 + 1), "row label", 0);
  return label;
}

FeatureMatrix assemble_matrix(const std::vector<Vector>& band_vectors_h,
                              const std::vector<Vector>& band_vectors_v,
                              const dsp::OctaveBandSpec& spec) {
  if (band_vectors_h.size() != band_vectors_v.size()) {
    throw StructuralError("channel record counts differ: " +
                          std::to_string(band_vectors_h.size()) + " vs " +
                          std::to_string(band_vectors_v.size()));
  }
  if (band_vectors_h.empty()) {
    throw StructuralError("no band vectors to assemble");
  }
  const Index bands = band_vectors_h.front().size();
  if (bands != band_vectors_v.front().size()) {
    throw StructuralError("channel band counts differ");
  }
  if (spec.band_count() != bands) {
    throw StructuralError("band spec has " + std::to_string(spec.band_count()) +
                          " bands but vectors have " + std::to_string(bands));
  }
  const Index cols = static_cast<Index>(band_vectors_h.size());

  FeatureMatrix out;
  out.values.resize(2 * bands, cols);
  for (Index j = 0; j < cols; ++j) {
    const Vector& h = band_vectors_h[static_cast<std::size_t>(j)];
    const Vector& v = band_vectors_v[static_cast<std::size_t>(j)];
    if (h.size() != bands || v.size() != bands) {
      throw StructuralError("band vector " + std::to_string(j) + " has inconsistent length");
    }
    for (Index i = 0; i < bands; ++i) {
      out.values(i, j) = dsp::to_decibel(h[i]);
      out.values(bands + i, j) = dsp::to_decibel(v[i]);
    }
  }
  out.row_labels.reserve(static_cast<std::size_t>(2 * bands));
  for (Index i = 0; i < bands; ++i) {
    out.row_labels.push_back({'H', spec.band_low(i), spec.band_high(i)});
  }
  for (Index i = 0; i < bands; ++i) {
    out.row_labels.push_back({'V', spec.band_low(i), spec.band_high(i)});
  }
  return out;
}

NormalizationStats fit_normalizer(const FeatureMatrix& matrix, double fit_fraction) {
  if (fit_fraction <= 0.0 || fit_fraction > 1.0) {
    throw ArgumentError("fit_fraction must lie in (0, 1]");
  }
  if (matrix.cols() < 2) {
    throw ArgumentError("fit_normalizer needs at least 2 columns");
  }
  const Index fit_cols = static_cast<Index>(
      std::floor(fit_fraction * static_cast<double>(matrix.cols())));
  if (fit_cols < 1) {
    throw ArgumentError("fit_fraction leaves no columns to fit on");
  }
  NormalizationStats stats;
  stats.fit_fraction = fit_fraction;
  const auto prefix = matrix.values.leftCols(fit_cols);
  stats.mu = prefix.rowwise().mean();
  stats.sigma.resize(matrix.rows());
  for (Index i = 0; i < matrix.rows(); ++i) {
    const double var =
        (prefix.row(i).array() - stats.mu[i]).square().sum() / static_cast<double>(fit_cols);
    stats.sigma[i] = std::max(std::sqrt(var), kSigmaFloor);
  }
  return stats;
}

FeatureMatrix apply_normalizer(const FeatureMatrix& matrix, const NormalizationStats& stats) {
  if (stats.mu.size() != matrix.rows() || stats.sigma.size() != matrix.rows()) {
    throw StructuralError("normalization stats cover " + std::to_string(stats.mu.size()) +
                          " rows, matrix has " + std::to_string(matrix.rows()));
  }
  FeatureMatrix out;
  out.row_labels = matrix.row_labels;
  out.values = (matrix.values.colwise() - stats.mu).array().colwise() / stats.sigma.array();
  return out;
}

void write_matrix_csv(const FeatureMatrix& matrix, VectorRef times_s, const fs::path& path) {
  if (times_s.size() != matrix.cols()) {
    throw StructuralError("times length does not match matrix columns");
  }
  std::vector<std::string> header;
  header.reserve(static_cast<std::size_t>(matrix.cols()) + 1);
  header.push_back("row_label");
  for (Index j = 0; j < times_s.size(); ++j) header.push_back(io::format_double(times_s[j]));

  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(matrix.rows()));
  for (Index i = 0; i < matrix.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(matrix.cols()) + 1);
    row.push_back(i < static_cast<Index>(matrix.row_labels.size())
                      ? matrix.row_labels[static_cast<std::size_t>(i)].str()
                      : "?:0:0");
    for (Index j = 0; j < matrix.cols(); ++j) {
      row.push_back(io::format_double(matrix.values(i, j)));
    }
    rows.push_back(std::move(row));
  }
  io::write_csv(path, header, rows);
}

MatrixWithTimes read_matrix_csv(const fs::path& path) {
  const io::CsvTable table = io::read_csv(path);
  if (table.header.size() < 2 || table.header[0] != "row_label") {
    throw ParseError("bad matrix csv header in " + path.string());
  }
  const Index cols = static_cast<Index>(table.header.size()) - 1;
  const Index rows = static_cast<Index>(table.rows.size());
  MatrixWithTimes out;
  out.times_s.resize(cols);
  for (Index j = 0; j < cols; ++j) {
    out.times_s[j] =
        io::parse_double(table.header[static_cast<std::size_t>(j) + 1], path.string(), 1);
  }
  out.matrix.values.resize(rows, cols);
  out.matrix.row_labels.reserve(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols + 1) {
      throw ParseError("wrong column count at " + path.string() + ":" + std::to_string(i + 2));
    }
    out.matrix.row_labels.push_back(RowLabel::parse(row[0]));
    for (Index j = 0; j < cols; ++j) {
      out.matrix.values(i, j) =
          io::parse_double(row[static_cast<std::size_t>(j) + 1], path.string(), i + 2);
    }
  }
  return out;
}

void write_stats_csv(const NormalizationStats& stats, const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < stats.mu.size(); ++i) {
    rows.push_back({std::to_string(i), io::format_double(stats.mu[i]),
                    io::format_double(stats.sigma[i])});
  }
  rows.push_back({"fit_fraction", io::format_double(stats.fit_fraction), ""});
  io::write_csv(path, {"row", "mu", "sigma"}, rows);
}

NormalizationStats read_stats_csv(const fs::path& path) {
  const io::CsvTable table = io::read_csv(path);
  NormalizationStats stats;
  std::vector<double> mu, sigma;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.empty()) continue;
    if (row[0] == "fit_fraction") {
      stats.fit_fraction = io::parse_double(row[1], path.string(), static_cast<long>(i) + 2);
      continue;
    }
    mu.push_back(io::parse_double(row[1], path.string(), static_cast<long>(i) + 2));
    sigma.push_back(io::parse_double(row[2], path.string(), static_cast<long>(i) + 2));
  }
  stats.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Index>(mu.size()));
  stats.sigma = Eigen::Map<const Vector>(sigma.data(), static_cast<Index>(sigma.size()));
  return stats;
}

}  // namespace obrul::preprocess
