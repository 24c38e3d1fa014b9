#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "obrul/errors.hpp"
#include "obrul/neural.hpp"
#include "obrul/rng.hpp"

using namespace obrul;
using neural::Activation;
using neural::LayerSpec;

namespace {

neural::Network zero_network(std::vector<LayerSpec> layers) {
  neural::Network net = neural::make_network(layers, 0);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  return net;
}

/// Central finite differences of the full cost, parameter by parameter.
neural::Gradients fd_gradients(const neural::Network& net, MatrixRef inputs, MatrixRef targets,
                               const neural::CostConfig& cfg, double h = 1e-5) {
  neural::Gradients out;
  neural::Network probe = net;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix gw(net.weights[l].rows(), net.weights[l].cols());
    for (Index i = 0; i < gw.rows(); ++i) {
      for (Index j = 0; j < gw.cols(); ++j) {
        const double saved = probe.weights[l](i, j);
        probe.weights[l](i, j) = saved + h;
        const double above = neural::cost(probe, inputs, targets, cfg).total;
        probe.weights[l](i, j) = saved - h;
        const double below = neural::cost(probe, inputs, targets, cfg).total;
        probe.weights[l](i, j) = saved;
        gw(i, j) = (above - below) / (2.0 * h);
      }
    }
    Vector gb(net.biases[l].size());
    for (Index i = 0; i < gb.size(); ++i) {
      const double saved = probe.biases[l][i];
      probe.biases[l][i] = saved + h;
      const double above = neural::cost(probe, inputs, targets, cfg).total;
      probe.biases[l][i] = saved - h;
      const double below = neural::cost(probe, inputs, targets, cfg).total;
      probe.biases[l][i] = saved;
      gb[i] = (above - below) / (2.0 * h);
    }
    out.weights.push_back(std::move(gw));
    out.biases.push_back(std::move(gb));
  }
  return out;
}

bool gradients_agree(double analytic, double fd) {
  const double tol = std::max(1e-4 * std::max(std::abs(analytic), std::abs(fd)), 1e-7);
  return std::abs(analytic - fd) <= tol;
}

void check_gradients(const neural::Network& net, MatrixRef inputs, MatrixRef targets,
                     const neural::CostConfig& cfg) {
  const neural::Gradients analytic = neural::gradients(net, inputs, targets, cfg);
  const neural::Gradients fd = fd_gradients(net, inputs, targets, cfg);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Index i = 0; i < analytic.weights[l].rows(); ++i) {
      for (Index j = 0; j < analytic.weights[l].cols(); ++j) {
        REQUIRE(gradients_agree(analytic.weights[l](i, j), fd.weights[l](i, j)));
      }
    }
    for (Index i = 0; i < analytic.biases[l].size(); ++i) {
      REQUIRE(gradients_agree(analytic.biases[l][i], fd.biases[l][i]));
    }
  }
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("activation definitions") {
  CHECK(neural::activate(Activation::kSigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(neural::activate(Activation::kElu, -20.0) ==
        doctest::Approx(std::expm1(-20.0)).epsilon(1e-8));
  CHECK(neural::activate(Activation::kElu, -20.0) > -1.0);
  CHECK(neural::activate(Activation::kElu, 2.0) == 2.0);
  CHECK(neural::activate(Activation::kRelu, -3.0) == 0.0);
  CHECK(neural::activate(Activation::kRelu, 3.0) == 3.0);
  CHECK(neural::activate(Activation::kLinear, -1.5) == -1.5);
}

TEST_CASE("forward with zero parameters and sigmoid yields one half") {
  const neural::Network net = zero_network({{3, 4, Activation::kSigmoid, 1.0}});
  const Vector out = neural::forward(net, Vector::Zero(3));
  for (Index i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.5));
}

TEST_CASE("forward through a linear identity layer") {
  neural::Network net = zero_network({{3, 3, Activation::kLinear, 1.0}});
  net.weights[0].setIdentity();
  Vector x(3);
  x << 0.3, -1.2, 4.0;
  const Vector out = neural::forward(net, x);
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches a naive triple-loop reimplementation") {
  Rng rng(5);
  const std::vector<LayerSpec> layers = {{4, 5, Activation::kSigmoid, 1.0},
                                         {5, 3, Activation::kElu, 1.0},
                                         {3, 2, Activation::kLinear, 3.0}};
  const neural::Network net = neural::make_network(layers, 31);
  Vector x(4);
  for (Index i = 0; i < 4; ++i) x[i] = rng.gaussian();

  // Straight-line evaluation with plain loops.
  std::vector<double> current(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> next(static_cast<std::size_t>(layers[l].out_dim));
    for (Index i = 0; i < layers[l].out_dim; ++i) {
      double z = net.biases[l][i];
      for (Index j = 0; j < layers[l].in_dim; ++j) {
        z += net.weights[l](i, j) * current[static_cast<std::size_t>(j)];
      }
      next[static_cast<std::size_t>(i)] =
          layers[l].output_scale * neural::activate(layers[l].activation, z);
    }
    current = std::move(next);
  }

  const Vector out = neural::forward(net, x);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(current[0]).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(current[1]).epsilon(1e-12));
}

TEST_CASE("forward applies the output scale exactly") {
  neural::Network net = zero_network({{2, 2, Activation::kLinear, 3.0}});
  net.weights[0].setIdentity();
  Vector x(2);
  x << 1.25, -0.5;
  const Vector out = neural::forward(net, x);
  CHECK(out[0] == 3.0 * 1.25);
  CHECK(out[1] == 3.0 * -0.5);
}

TEST_CASE("zero cost requires every component to vanish") {
  // Zero weights, sigmoid hidden with rho matched to the resting activation.
  const neural::Network net = zero_network(
      {{2, 3, Activation::kSigmoid, 1.0}, {3, 2, Activation::kLinear, 1.0}});
  const Matrix inputs = Matrix::Random(2, 4);
  const Matrix targets = Matrix::Zero(2, 4);
  neural::CostConfig cfg{0.1, 0.1, 0.5};
  const neural::CostBreakdown e = neural::cost(net, inputs, targets, cfg);
  CHECK(e.mse == 0.0);
  CHECK(e.l2 == 0.0);
  CHECK(e.kl == doctest::Approx(0.0));
  CHECK(e.total == doctest::Approx(0.0));
}

TEST_CASE("KL term is zero only at the target activation") {
  // Hidden sigmoid with zero weights rests at sigma(bias), pinning rho_hat.
  auto cost_at = [](double rho_hat) {
    neural::Network net = zero_network(
        {{1, 2, Activation::kSigmoid, 1.0}, {2, 1, Activation::kLinear, 1.0}});
    net.biases[0].setConstant(logit(rho_hat));
    const Matrix inputs = Matrix::Zero(1, 3);
    const Matrix targets = Matrix::Zero(1, 3);
    neural::CostConfig cfg{0.0, 1.0, 0.05};
    return neural::cost(net, inputs, targets, cfg);
  };
  CHECK(cost_at(0.05).kl == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cost_at(0.01).kl > 0.0);
  CHECK(cost_at(0.5).kl > 0.0);
  CHECK(cost_at(0.01).total == doctest::Approx(cost_at(0.01).kl));
}

TEST_CASE("cost matches an independent scalar evaluation on a 2-2-2 network") {
  // Hand-built parameters, evaluated with plain scalar arithmetic.
  neural::Network net = zero_network(
      {{2, 2, Activation::kSigmoid, 1.0}, {2, 2, Activation::kElu, 3.0}});
  net.weights[0] << 0.3, -0.7, 0.5, 0.2;
  net.biases[0] << 0.1, -0.2;
  net.weights[1] << -0.4, 0.6, 0.8, -0.1;
  net.biases[1] << 0.05, 0.0;

  Matrix inputs(2, 2);
  inputs << 0.9, -1.1, 0.4, 0.7;
  Matrix targets(2, 2);
  targets << 0.2, -0.3, 1.0, 0.5;
  const neural::CostConfig cfg{0.01, 0.2, 0.05};

  double mse_acc = 0.0;
  double rho_acc = 0.0;
  for (int s = 0; s < 2; ++s) {
    double f1[2];
    for (int i = 0; i < 2; ++i) {
      const double z = net.weights[0](i, 0) * inputs(0, s) +
                       net.weights[0](i, 1) * inputs(1, s) + net.biases[0][i];
      f1[i] = 1.0 / (1.0 + std::exp(-z));
      rho_acc += std::abs(f1[i]);
    }
    for (int i = 0; i < 2; ++i) {
      const double z = net.weights[1](i, 0) * f1[0] + net.weights[1](i, 1) * f1[1] +
                       net.biases[1][i];
      const double f2 = z < 0.0 ? std::expm1(z) : z;
      const double out = 3.0 * f2;
      mse_acc += (out - targets(i, s)) * (out - targets(i, s));
    }
  }
  const double mse = mse_acc / (2.0 * 2.0);
  double l2 = 0.0;
  for (int l = 0; l < 2; ++l) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) l2 += net.weights[l](i, j) * net.weights[l](i, j);
    }
  }
  l2 *= 0.5;
  const double rho_hat = rho_acc / 4.0;
  const double kl = 0.05 * std::log(0.05 / rho_hat) +
                    0.95 * std::log(0.95 / (1.0 - rho_hat));
  const double expected = mse + cfg.lambda * l2 + cfg.beta * kl;

  const neural::CostBreakdown e = neural::cost(net, inputs, targets, cfg);
  CHECK(e.mse == doctest::Approx(mse).epsilon(1e-12));
  CHECK(e.l2 == doctest::Approx(l2).epsilon(1e-12));
  CHECK(e.kl == doctest::Approx(kl).epsilon(1e-12));
  CHECK(e.total == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(neural::cost(net, Matrix(2, 0), Matrix(2, 0), cfg), ArgumentError);
}

TEST_CASE("gradient of a bare linear layer matches the closed form") {
  Rng rng(41);
  neural::Network net = zero_network({{3, 1, Activation::kLinear, 1.0}});
  for (Index j = 0; j < 3; ++j) net.weights[0](0, j) = rng.gaussian();
  Matrix inputs(3, 6);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 6; ++j) inputs(i, j) = rng.gaussian();
  }
  const Matrix targets = Matrix::Zero(1, 6);
  const neural::CostConfig cfg{0.0, 0.0, 0.05};

  const neural::Gradients g = neural::gradients(net, inputs, targets, cfg);

  // (2/N) * sum_n (w . x_n) x_n^T with zero targets.
  Vector closed = Vector::Zero(3);
  for (Index n = 0; n < 6; ++n) {
    const double out = net.weights[0].row(0).dot(inputs.col(n));
    closed += 2.0 * out * inputs.col(n);
  }
  closed /= 6.0;
  for (Index j = 0; j < 3; ++j) {
    CHECK(g.weights[0](0, j) == doctest::Approx(closed[j]).epsilon(1e-12));
  }
}

TEST_CASE("L2 contribution to the gradient is exactly lambda times the weight") {
  Rng rng(43);
  neural::Network net = zero_network({{2, 2, Activation::kLinear, 1.0}});
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) net.weights[0](i, j) = rng.gaussian();
  }
  const Matrix inputs = Matrix::Zero(2, 3);  // kills the data term
  const Matrix targets = Matrix::Zero(2, 3);
  const double lambda = 0.37;
  const neural::Gradients g =
      neural::gradients(net, inputs, targets, {lambda, 0.0, 0.05});
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      CHECK(g.weights[0](i, j) == doctest::Approx(lambda * net.weights[0](i, j)));
    }
  }
}

TEST_CASE("analytic gradients agree with finite differences everywhere") {
  // 20 random networks covering every activation and the x3 output scale.
  Rng rng(2024);
  const Activation kinds[] = {Activation::kSigmoid, Activation::kElu, Activation::kRelu,
                              Activation::kLinear};
  for (int trial = 0; trial < 20; ++trial) {
    const int layer_count = 1 + static_cast<int>(rng.below(3));
    std::vector<LayerSpec> layers;
    Index in_dim = 2 + static_cast<Index>(rng.below(7));
    for (int l = 0; l < layer_count; ++l) {
      LayerSpec spec;
      spec.in_dim = in_dim;
      spec.out_dim = 2 + static_cast<Index>(rng.below(7));
      spec.activation = kinds[rng.below(4)];
      spec.output_scale = rng.below(3) == 0 ? 3.0 : 1.0;
      in_dim = spec.out_dim;
      layers.push_back(spec);
    }
    neural::Network net = neural::make_network(layers, rng.next_u64());
    // Generic evaluation point: zero biases can park a dead relu exactly on
    // its kink, where central differences and the subgradient disagree.
    for (auto& b : net.biases) {
      for (Index i = 0; i < b.size(); ++i) b[i] = 0.3 * rng.gaussian();
    }
    Matrix inputs(layers.front().in_dim, 5);
    Matrix targets(layers.back().out_dim, 5);
    for (Index i = 0; i < inputs.rows(); ++i) {
      for (Index j = 0; j < inputs.cols(); ++j) inputs(i, j) = rng.gaussian();
    }
    for (Index i = 0; i < targets.rows(); ++i) {
      for (Index j = 0; j < targets.cols(); ++j) targets(i, j) = rng.gaussian();
    }
    const neural::CostConfig cfg{rng.uniform() * 0.1, rng.uniform() * 0.1, 0.05};
    check_gradients(net, inputs, targets, cfg);
  }
}

TEST_CASE("training recovers y = 3x") {
  neural::Network net = neural::make_network(
      std::vector<LayerSpec>{{1, 1, Activation::kLinear, 1.0}}, 7);
  Matrix inputs(1, 64);
  Matrix targets(1, 64);
  for (Index j = 0; j < 64; ++j) {
    inputs(0, j) = -1.0 + 2.0 * static_cast<double>(j) / 63.0;
    targets(0, j) = 3.0 * inputs(0, j);
  }
  neural::TrainOptions opt;
  opt.learning_rate = 1e-2;
  opt.batch_size = 16;
  opt.epochs = 2000;
  opt.seed = 11;
  opt.validation_fraction = 0.25;
  opt.patience = 200;
  const neural::CostConfig cfg{0.0, 0.0, 0.05};
  const neural::TrainResult result = neural::train(net, inputs, targets, cfg, opt);

  CHECK(result.net.weights[0](0, 0) == doctest::Approx(3.0).epsilon(1e-2 / 3.0));
  CHECK(std::abs(result.net.biases[0][0]) < 1e-2);

  // Best validation loss never exceeds the initial one.
  CHECK(result.best_val_loss <= result.history.front().val_loss);
  CHECK(result.history.front().epoch == 0);
}

TEST_CASE("zero epochs return the initial parameters") {
  const neural::Network net = neural::make_network(
      std::vector<LayerSpec>{{2, 2, Activation::kElu, 1.0}}, 13);
  Matrix inputs = Matrix::Random(2, 8);
  neural::TrainOptions opt;
  opt.epochs = 0;
  opt.validation_fraction = 0.25;
  const neural::TrainResult result =
      neural::train(net, inputs, inputs, {0.0, 0.0, 0.05}, opt);
  CHECK((result.net.weights[0] - net.weights[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((result.net.biases[0] - net.biases[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(result.history.size() == 1);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const neural::Network net = neural::make_network(
      std::vector<LayerSpec>{{3, 4, Activation::kSigmoid, 1.0}, {4, 3, Activation::kElu, 1.0}},
      17);
  Rng rng(55);
  Matrix inputs(3, 24);
  for (Index i = 0; i < inputs.rows(); ++i) {
    for (Index j = 0; j < inputs.cols(); ++j) inputs(i, j) = rng.gaussian();
  }
  neural::TrainOptions opt;
  opt.epochs = 25;
  opt.seed = 99;
  opt.validation_fraction = 0.25;
  opt.patience = 0;
  const neural::CostConfig cfg{1e-4, 1e-2, 0.05};
  const neural::TrainResult a = neural::train(net, inputs, inputs, cfg, opt);
  const neural::TrainResult b = neural::train(net, inputs, inputs, cfg, opt);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    REQUIRE(a.history[e].train_loss == b.history[e].train_loss);
    REQUIRE(a.history[e].val_loss == b.history[e].val_loss);
  }
}

TEST_CASE("cost is non-negative on random networks") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<LayerSpec> layers = {{3, 4, Activation::kElu, 1.0},
                                           {4, 3, Activation::kRelu, 1.0}};
    const neural::Network net = neural::make_network(layers, rng.next_u64());
    Matrix inputs = Matrix::Random(3, 5);
    Matrix targets = Matrix::Random(3, 5);
    const neural::CostBreakdown e =
        neural::cost(net, inputs, targets, {0.01, 0.01, 0.05});
    CHECK(e.total >= 0.0);
    CHECK(e.mse >= 0.0);
    CHECK(e.l2 >= 0.0);
    CHECK(e.kl >= 0.0);
  }
}
