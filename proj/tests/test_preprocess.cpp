#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/preprocess.hpp"
#include "obrul/rng.hpp"

using namespace obrul;
namespace fs = std::filesystem;

namespace {

dsp::OctaveBandSpec spec_with_bands(Index bands) {
  // Uniform synthetic edges are enough for labeling.
  dsp::OctaveBandSpec spec;
  spec.m = 1.0;
  spec.n = 1;
  spec.edges_hz.resize(bands + 1);
  for (Index i = 0; i <= bands; ++i) spec.edges_hz[i] = static_cast<double>(i) * 10.0;
  spec.n_const = bands + 1;
  return spec;
}

std::vector<Vector> constant_vectors(Index count, Index bands, double value) {
  std::vector<Vector> out;
  for (Index j = 0; j < count; ++j) out.push_back(Vector::Constant(bands, value));
  return out;
}

preprocess::FeatureMatrix matrix_from(const Matrix& values) {
  preprocess::FeatureMatrix fm;
  fm.values = values;
  for (Index i = 0; i < values.rows(); ++i) {
    fm.row_labels.push_back({'H', static_cast<double>(i), static_cast<double>(i + 1)});
  }
  return fm;
}

}  // namespace

TEST_CASE("assemble_matrix stacks both channels in dB") {
  const Index bands = 88;
  const auto spec = spec_with_bands(bands);
  const auto h = constant_vectors(100, bands, 1.0);         // 0 dB
  const auto v = constant_vectors(100, bands, 10.0);        // 10 dB
  const preprocess::FeatureMatrix fm = preprocess::assemble_matrix(h, v, spec);
  CHECK(fm.rows() == 176);
  CHECK(fm.cols() == 100);
  CHECK(fm.values(0, 0) == doctest::Approx(0.0));
  CHECK(fm.values(88, 0) == doctest::Approx(10.0));
  CHECK(fm.row_labels[0].channel == 'H');
  CHECK(fm.row_labels[88].channel == 'V');

  // Swapping the channel inputs swaps the row blocks.
  const preprocess::FeatureMatrix swapped = preprocess::assemble_matrix(v, h, spec);
  CHECK(swapped.values(0, 0) == doctest::Approx(10.0));
  CHECK(swapped.values(88, 0) == doctest::Approx(0.0));
}

TEST_CASE("assemble_matrix accepts a single record") {
  const auto spec = spec_with_bands(4);
  const preprocess::FeatureMatrix fm = preprocess::assemble_matrix(
      constant_vectors(1, 4, 1.0), constant_vectors(1, 4, 1.0), spec);
  CHECK(fm.cols() == 1);
  CHECK(fm.rows() == 8);
}

TEST_CASE("assemble_matrix rejects mismatched inputs") {
  const auto spec = spec_with_bands(4);
  CHECK_THROWS_AS(preprocess::assemble_matrix(constant_vectors(2, 4, 1.0),
                                              constant_vectors(3, 4, 1.0), spec),
                  StructuralError);
  CHECK_THROWS_AS(preprocess::assemble_matrix(constant_vectors(2, 4, 1.0),
                                              constant_vectors(2, 5, 1.0), spec),
                  StructuralError);
}

TEST_CASE("fit_normalizer matches a scalar oracle on the worked row") {
  Matrix values(1, 10);
  values << 1, 1, 1, 1, 1, 9, 9, 9, 9, 9;
  const preprocess::FeatureMatrix fm = matrix_from(values);
  const preprocess::NormalizationStats stats = preprocess::fit_normalizer(fm, 0.8);

  // Independent evaluation over the 8-element prefix.
  double mu = 0.0;
  for (Index j = 0; j < 8; ++j) mu += values(0, j);
  mu /= 8.0;
  double var = 0.0;
  for (Index j = 0; j < 8; ++j) var += (values(0, j) - mu) * (values(0, j) - mu);
  var /= 8.0;

  CHECK(mu == doctest::Approx(4.0));
  CHECK(stats.mu[0] == doctest::Approx(mu));
  CHECK(stats.sigma[0] == doctest::Approx(std::sqrt(var)));
  CHECK(stats.sigma[0] == doctest::Approx(std::sqrt(15.0)));
}

TEST_CASE("fit_normalizer clamps a constant row") {
  Matrix values = Matrix::Constant(2, 6, 5.5);
  const preprocess::NormalizationStats stats =
      preprocess::fit_normalizer(matrix_from(values), 0.8);
  CHECK(stats.mu[0] == doctest::Approx(5.5));
  CHECK(stats.sigma[0] == preprocess::kSigmaFloor);
}

TEST_CASE("fit_fraction 1.0 matches plain column statistics") {
  Rng rng(3);
  Matrix values(3, 12);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) values(i, j) = rng.uniform(-4.0, 4.0);
  }
  const preprocess::NormalizationStats stats =
      preprocess::fit_normalizer(matrix_from(values), 1.0);
  for (Index i = 0; i < values.rows(); ++i) {
    double mu = 0.0;
    for (Index j = 0; j < values.cols(); ++j) mu += values(i, j);
    mu /= static_cast<double>(values.cols());
    double var = 0.0;
    for (Index j = 0; j < values.cols(); ++j) var += (values(i, j) - mu) * (values(i, j) - mu);
    var /= static_cast<double>(values.cols());
    CHECK(stats.mu[i] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(stats.sigma[i] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  }
}

TEST_CASE("fit_normalizer input validation") {
  Matrix one_col = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(preprocess::fit_normalizer(matrix_from(one_col), 0.8), ArgumentError);
  Matrix two_col = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(preprocess::fit_normalizer(matrix_from(two_col), 0.2), ArgumentError);
  CHECK_THROWS_AS(preprocess::fit_normalizer(matrix_from(two_col), 0.0), ArgumentError);
}

TEST_CASE("apply_normalizer centers, inverts, and standardizes the prefix") {
  Rng rng(17);
  Matrix values(4, 20);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) values(i, j) = rng.gaussian() * 3.0 + 2.0;
  }
  const preprocess::FeatureMatrix fm = matrix_from(values);
  const preprocess::NormalizationStats stats = preprocess::fit_normalizer(fm, 0.8);
  const preprocess::FeatureMatrix normalized = preprocess::apply_normalizer(fm, stats);

  // Row labels are carried through unchanged.
  REQUIRE(normalized.row_labels.size() == fm.row_labels.size());
  CHECK(normalized.row_labels[2].f_low_hz == fm.row_labels[2].f_low_hz);

  // A matrix equal to its own fitted mean maps to zero.
  preprocess::FeatureMatrix mean_matrix = fm;
  for (Index i = 0; i < values.rows(); ++i) mean_matrix.values.row(i).setConstant(stats.mu[i]);
  const preprocess::FeatureMatrix zeros = preprocess::apply_normalizer(mean_matrix, stats);
  CHECK(zeros.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // Affine inverse restores the original.
  Matrix restored = normalized.values;
  for (Index i = 0; i < restored.rows(); ++i) {
    restored.row(i) = restored.row(i) * stats.sigma[i] + Matrix::Constant(1, restored.cols(), stats.mu[i]);
  }
  CHECK((restored - values).cwiseAbs().maxCoeff() < 1e-9);

  // The fit prefix of the normalized matrix has mean 0 and std 1.
  const Index fit_cols = 16;
  for (Index i = 0; i < values.rows(); ++i) {
    double mu = 0.0;
    for (Index j = 0; j < fit_cols; ++j) mu += normalized.values(i, j);
    mu /= fit_cols;
    double var = 0.0;
    for (Index j = 0; j < fit_cols; ++j) {
      var += (normalized.values(i, j) - mu) * (normalized.values(i, j) - mu);
    }
    var /= fit_cols;
    CHECK(std::abs(mu) < 1e-9);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
  }

  // Refitting on normalized data is idempotent up to the affine map.
  const preprocess::NormalizationStats refit = preprocess::fit_normalizer(normalized, 0.8);
  for (Index i = 0; i < values.rows(); ++i) {
    CHECK(std::abs(refit.mu[i]) < 1e-9);
    CHECK(refit.sigma[i] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("apply_normalizer rejects a shape mismatch") {
  Matrix values = Matrix::Zero(4, 6);
  preprocess::NormalizationStats stats;
  stats.mu = Vector::Zero(3);
  stats.sigma = Vector::Ones(3);
  CHECK_THROWS_AS(preprocess::apply_normalizer(matrix_from(values), stats), StructuralError);
}

TEST_CASE("matrix csv round-trip is exact") {
  Rng rng(23);
  Matrix values(6, 9);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) values(i, j) = rng.gaussian();
  }
  const preprocess::FeatureMatrix fm = matrix_from(values);
  Vector times(9);
  for (Index j = 0; j < 9; ++j) times[j] = 10.0 * j;

  const fs::path path = fs::temp_directory_path() / "obrul_matrix_roundtrip.csv";
  preprocess::write_matrix_csv(fm, times, path);
  const preprocess::MatrixWithTimes back = preprocess::read_matrix_csv(path);
  fs::remove(path);

  CHECK((back.times_s - times).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.matrix.values - values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.matrix.row_labels[3].channel == 'H');
  CHECK(back.matrix.row_labels[3].f_low_hz == 3.0);
}
