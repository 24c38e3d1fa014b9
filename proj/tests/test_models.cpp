#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/models.hpp"
#include "obrul/rng.hpp"

using namespace obrul;
namespace fs = std::filesystem;

namespace {

preprocess::NormalizationStats identity_stats(Index rows) {
  preprocess::NormalizationStats stats;
  stats.mu = Vector::Zero(rows);
  stats.sigma = Vector::Ones(rows);
  stats.fit_fraction = 0.8;
  return stats;
}

models::AeArch small_arch(Index input_dim, Index bottleneck = 4) {
  models::AeArch arch;
  arch.input_dim = input_dim;
  arch.enc_hidden1 = 16;
  arch.enc_hidden2 = 8;
  arch.bottleneck = bottleneck;
  arch.dec_hidden = 16;
  return arch;
}

neural::TrainOptions quick_options(Index epochs, std::uint64_t seed) {
  neural::TrainOptions opt;
  opt.epochs = epochs;
  opt.seed = seed;
  opt.validation_fraction = 0.5;
  opt.patience = 0;
  opt.batch_size = 16;
  return opt;
}

const neural::CostConfig kAeCost{1e-4, 1e-2, 0.05};

models::AeModel train_small_ae(const Matrix& columns, Index epochs, std::uint64_t seed,
                               Index bottleneck = 4) {
  return models::train_autoencoder(columns, small_arch(columns.rows(), bottleneck), kAeCost,
                                   quick_options(epochs, seed), identity_stats(columns.rows()));
}

}  // namespace

TEST_CASE("autoencoder wiring matches the published configuration") {
  Rng rng(1);
  Matrix columns(176, 12);
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) columns(i, j) = rng.gaussian();
  }
  models::AeArch arch;  // defaults: 176-64-16-4-64-176
  const models::AeModel model = models::train_autoencoder(
      columns, arch, kAeCost, quick_options(1, 3), identity_stats(176));
  CHECK(model.encoder.input_dim() == 176);
  CHECK(model.encoder.output_dim() == 4);
  CHECK(model.decoder.input_dim() == 4);
  CHECK(model.decoder.output_dim() == 176);
  CHECK(model.encoder.layer_count() == 3);
  CHECK(model.decoder.layer_count() == 2);
  CHECK(model.decoder.layers.back().output_scale == 3.0);
  CHECK(models::encode(model, columns.col(0)).size() == 4);
  CHECK(models::decode(model, Vector::Zero(4)).size() == 176);
}

TEST_CASE("identical columns give constant bottleneck features") {
  Matrix columns(10, 24);
  Vector pattern(10);
  pattern << 0.5, -0.2, 1.1, 0.0, -0.7, 0.3, 0.9, -1.2, 0.4, 0.1;
  for (Index j = 0; j < columns.cols(); ++j) columns.col(j) = pattern;
  const models::AeModel model = train_small_ae(columns, 60, 5);

  const Matrix features = models::encode_all(model, columns);
  for (Index i = 0; i < features.rows(); ++i) {
    const double spread = features.row(i).maxCoeff() - features.row(i).minCoeff();
    CHECK(spread < 1e-3);
  }
}

TEST_CASE("a degrading run shifts at least one bottleneck feature") {
  // Stationary noise before the onset, then a growing shift on a few rows.
  Rng rng(9);
  const Index rows = 12, cols = 90, onset = 54;
  Matrix columns(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) columns(i, j) = 0.1 * rng.gaussian();
  }
  for (Index j = onset; j < cols; ++j) {
    const double ramp = static_cast<double>(j - onset + 1) / (cols - onset);
    for (Index i = 0; i < 4; ++i) columns(i, j) += 3.0 * ramp;
  }
  const models::AeModel model = train_small_ae(columns, 150, 21);
  const Matrix features = models::encode_all(model, columns);

  bool found = false;
  for (Index i = 0; i < features.rows(); ++i) {
    const auto pre = features.row(i).leftCols(onset);
    const auto post = features.row(i).rightCols(cols - onset);
    const double pre_mean = pre.mean();
    const double pre_std =
        std::sqrt((pre.array() - pre_mean).square().sum() / static_cast<double>(onset));
    const double post_mean = post.mean();
    if (std::abs(post_mean - pre_mean) > 3.0 * std::max(pre_std, 1e-12)) found = true;
  }
  CHECK(found);
}

TEST_CASE("encode is deterministic and round-trips within the recorded loss") {
  Rng rng(31);
  Matrix columns(10, 40);
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) columns(i, j) = rng.gaussian();
  }
  const models::AeModel model = train_small_ae(columns, 200, 7);

  const Vector f1 = models::encode(model, columns.col(3));
  const Vector f2 = models::encode(model, columns.col(3));
  CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);

  // Reconstruction error of a training column stays within 10x the recorded
  // validation loss.
  double worst = 0.0;
  for (Index j = 0; j < columns.cols(); ++j) {
    const Vector rec = models::decode(model, models::encode(model, columns.col(j)));
    const double mse = (rec - columns.col(j)).squaredNorm() / columns.rows();
    worst = std::max(worst, mse);
  }
  CHECK(worst < model.val_loss * 10.0);
}

TEST_CASE("decode respects the elu floor and is deterministic") {
  Rng rng(33);
  Matrix columns(10, 20);
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) columns(i, j) = rng.gaussian();
  }
  const models::AeModel model = train_small_ae(columns, 30, 13);

  // The scaled elu output is bounded below by -3.
  for (int trial = 0; trial < 50; ++trial) {
    Vector features(4);
    for (Index i = 0; i < 4; ++i) features[i] = rng.uniform(-1.0, 3.0);
    const Vector rec = models::decode(model, features);
    CHECK(rec.minCoeff() > -3.0);
  }

  const Vector a = models::decode(model, Vector::Zero(4));
  const Vector b = models::decode(model, Vector::Zero(4));
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-limited bottleneck cannot reconstruct five orthogonal directions") {
  // Five orthogonal column directions through a width-4 bottleneck.
  const Index rows = 10;
  Matrix columns(rows, 50);
  columns.setZero();
  for (Index j = 0; j < columns.cols(); ++j) {
    columns(j % 5, j) = 2.0;
  }
  const models::AeModel model = train_small_ae(columns, 250, 17);
  double total = 0.0;
  for (Index j = 0; j < columns.cols(); ++j) {
    const Vector rec = models::decode(model, models::encode(model, columns.col(j)));
    total += (rec - columns.col(j)).squaredNorm() / rows;
  }
  CHECK(total / columns.cols() > 1e-3);
}

TEST_CASE("ffnn fits constant and linear targets") {
  Rng rng(51);
  Matrix features(4, 120);
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) features(i, j) = rng.uniform();
  }
  models::FfnnArch arch;
  neural::TrainOptions opt = quick_options(400, 23);
  opt.validation_fraction = 0.3;
  const neural::CostConfig cost{1e-5, 0.0, 0.05};

  SUBCASE("all-zero labels collapse the output") {
    const Vector labels = Vector::Zero(features.cols());
    const models::FfnnModel model =
        models::train_ffnn(features, labels, arch, cost, opt, 100.0);
    double mean = 0.0;
    for (Index j = 0; j < features.cols(); ++j) {
      mean += models::estimate_rul(model, features.col(j)).normalized;
    }
    mean /= static_cast<double>(features.cols());
    CHECK(mean < 0.05);
  }

  SUBCASE("linear labels are matched closely") {
    Vector weights(4);
    weights << 0.3, 0.2, 0.25, 0.15;
    Vector labels(features.cols());
    for (Index j = 0; j < features.cols(); ++j) {
      labels[j] = std::clamp(weights.dot(features.col(j)), 0.0, 1.0);
    }
    const models::FfnnModel model =
        models::train_ffnn(features, labels, arch, cost, opt, 100.0);
    double sse = 0.0;
    for (Index j = 0; j < features.cols(); ++j) {
      const double err = models::estimate_rul(model, features.col(j)).normalized - labels[j];
      sse += err * err;
    }
    CHECK(std::sqrt(sse / features.cols()) < 0.05);
  }

  SUBCASE("training is seed-deterministic") {
    const Vector labels = Vector::Constant(features.cols(), 0.5);
    const models::FfnnModel a = models::train_ffnn(features, labels, arch, cost, opt, 1.0);
    const models::FfnnModel b = models::train_ffnn(features, labels, arch, cost, opt, 1.0);
    for (std::size_t l = 0; l < a.net.layer_count(); ++l) {
      REQUIRE((a.net.weights[l] - b.net.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("labels outside the unit interval are rejected") {
    Vector labels = Vector::Constant(features.cols(), 0.5);
    labels[3] = 1.5;
    CHECK_THROWS_AS(models::train_ffnn(features, labels, arch, cost, opt, 1.0),
                    ArgumentError);
  }
}

TEST_CASE("ffnn output is non-negative everywhere") {
  Rng rng(61);
  Matrix features(4, 60);
  Vector labels(60);
  for (Index j = 0; j < 60; ++j) {
    for (Index i = 0; i < 4; ++i) features(i, j) = rng.gaussian();
    labels[j] = rng.uniform();
  }
  const models::FfnnModel model = models::train_ffnn(
      features, labels, models::FfnnArch{}, {1e-4, 0.0, 0.05}, quick_options(50, 71), 50.0);
  for (int trial = 0; trial < 10000; ++trial) {
    Vector probe(4);
    for (Index i = 0; i < 4; ++i) probe[i] = rng.gaussian() * 5.0;
    REQUIRE(models::estimate_rul(model, probe).normalized >= 0.0);
  }
}

TEST_CASE("estimate_rul scales by the stored maximum") {
  models::FfnnModel model;
  neural::LayerSpec passthrough{1, 1, neural::Activation::kLinear, 1.0};
  model.net = neural::make_network(std::vector<neural::LayerSpec>{passthrough}, 0);
  model.net.weights[0](0, 0) = 1.0;
  model.net.biases[0][0] = 0.0;
  model.rul_max_s = 28000.0;
  CHECK(models::estimate_rul(model, Vector::Zero(1)).seconds == 0.0);
  Vector one(1);
  one << 1.0;
  CHECK(models::estimate_rul(model, one).seconds == doctest::Approx(28000.0));
}

TEST_CASE("model files round-trip byte for byte") {
  Rng rng(81);
  Matrix columns(8, 20);
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) columns(i, j) = rng.gaussian();
  }
  const models::AeModel model = train_small_ae(columns, 10, 29);

  const fs::path dir = fs::temp_directory_path() / "obrul_model_io";
  fs::create_directories(dir);
  const fs::path first = dir / "a.model";
  const fs::path second = dir / "b.model";
  models::save_model(model, first, "fixed");
  const models::AeModel loaded = models::load_ae_model(first);
  models::save_model(loaded, second, "fixed");
  CHECK(io::read_text_file(first) == io::read_text_file(second));

  // Loaded parameters are bit-exact.
  for (std::size_t l = 0; l < model.encoder.layer_count(); ++l) {
    CHECK((loaded.encoder.weights[l] - model.encoder.weights[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(loaded.normalization.fit_fraction == model.normalization.fit_fraction);
  CHECK(loaded.val_loss == model.val_loss);
  fs::remove_all(dir);
}

TEST_CASE("model loading rejects corruption, wrong kinds, and truncation") {
  Rng rng(91);
  Matrix columns(8, 20);
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) columns(i, j) = rng.gaussian();
  }
  const models::AeModel model = train_small_ae(columns, 5, 37);
  const fs::path dir = fs::temp_directory_path() / "obrul_model_err";
  fs::create_directories(dir);
  const fs::path path = dir / "m.model";
  models::save_model(model, path, "fixed");
  const std::string bytes = io::read_text_file(path);

  SUBCASE("flipped byte inside a weight block") {
    std::string corrupt = bytes;
    const std::size_t at = corrupt.find("weights ") + 12;
    corrupt[at] = corrupt[at] == '7' ? '8' : '7';
    io::write_text_file(path, corrupt);
    CHECK_THROWS_AS(models::load_ae_model(path), ModelChecksumError);
  }

  SUBCASE("kind mismatch") {
    CHECK_THROWS_AS(models::load_ffnn_model(path), ModelKindError);
  }

  SUBCASE("truncation loses the checksum") {
    io::write_text_file(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(models::load_ae_model(path), ModelIoError);
  }

  SUBCASE("unsupported version") {
    std::string other = bytes;
    other.replace(other.find("obrul-model 1"), 13, "obrul-model 9");
    // Re-stamp the checksum so only the version differs.
    const std::size_t marker = other.rfind("checksum ");
    other = other.substr(0, marker);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "checksum %016llx\n",
                  static_cast<unsigned long long>(fnv1a64(other.data(), other.size())));
    other += buf;
    io::write_text_file(path, other);
    CHECK_THROWS_AS(models::load_ae_model(path), ModelVersionError);
  }

  fs::remove_all(dir);
}
