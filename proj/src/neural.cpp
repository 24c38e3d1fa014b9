#include "obrul/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/rng.hpp"

namespace obrul::neural {

namespace {
constexpr double kRhoClampLo = 1e-6;
constexpr double kRhoClampHi = 1.0 - 1e-6;
}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kElu: return "elu";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "elu") return Activation::kElu;
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  throw ArgumentError("unknown activation '" + name + "'");
}

double activate(Activation kind, double z) {
  switch (kind) {
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::kElu: return z < 0.0 ? std::expm1(z) : z;
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kLinear: return z;
  }
  return z;
}

double activate_derivative(Activation kind, double z) {
  switch (kind) {
    case Activation::kSigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case Activation::kElu: return z < 0.0 ? std::exp(z) : 1.0;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}

void Network::validate() const {
  if (layers.empty()) {
    throw StructuralError("network has no layers");
  }
  if (weights.size() != layers.size() || biases.size() != layers.size()) {
    throw StructuralError("parameter block count does not match layer count");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    if (spec.in_dim < 1 || spec.out_dim < 1) {
      throw StructuralError("layer " + std::to_string(l) + " has non-positive dims");
    }
    if (l > 0 && layers[l - 1].out_dim != spec.in_dim) {
      throw StructuralError("layer " + std::to_string(l) + " expects input " +
                            std::to_string(spec.in_dim) + " but previous layer outputs " +
                            std::to_string(layers[l - 1].out_dim));
    }
    if (weights[l].rows() != spec.out_dim || weights[l].cols() != spec.in_dim ||
        biases[l].size() != spec.out_dim) {
      throw StructuralError("layer " + std::to_string(l) + " parameter shapes are wrong");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw StructuralError("layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

Network make_network(std::span<const LayerSpec> layers, std::uint64_t seed) {
  Network net;
  net.layers.assign(layers.begin(), layers.end());
  Rng rng(seed);
  for (const LayerSpec& spec : layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
    Matrix w(spec.out_dim, spec.in_dim);
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(spec.out_dim));
  }
  net.validate();
  return net;
}

Matrix forward_batch(const Network& net, MatrixRef inputs, ForwardCache* cache) {
  if (inputs.rows() != net.input_dim()) {
    throw StructuralError("input has " + std::to_string(inputs.rows()) +
                          " rows, network expects " + std::to_string(net.input_dim()));
  }
  const std::size_t layer_count = net.layer_count();
  if (cache) {
    cache->z.resize(layer_count);
    cache->f.resize(layer_count);
    cache->x.resize(layer_count + 1);
    cache->x[0] = inputs;
  }
  Matrix x = inputs;
  for (std::size_t l = 0; l < layer_count; ++l) {
    const LayerSpec& spec = net.layers[l];
    Matrix z = (net.weights[l] * x).colwise() + net.biases[l];
    Matrix f = z.unaryExpr([&spec](double v) { return activate(spec.activation, v); });
    if (spec.output_scale == 1.0) {
      x = f;
    } else {
      x = spec.output_scale * f;
    }
    if (cache) {
      cache->z[l] = std::move(z);
      cache->f[l] = std::move(f);
      cache->x[l + 1] = x;
    }
  }
  return x;
}

Vector forward(const Network& net, VectorRef input) {
  return forward_batch(net, input);
}

namespace {

/// Mean of |f| over units and samples for each layer, pre-clamp.
std::vector<double> layer_mean_abs_activation(const ForwardCache& cache) {
  std::vector<double> rho_hat(cache.f.size());
  for (std::size_t l = 0; l < cache.f.size(); ++l) {
    rho_hat[l] = cache.f[l].array().abs().mean();
  }
  return rho_hat;
}

double kl_divergence(double rho, double rho_hat) {
  const double r = std::clamp(rho_hat, kRhoClampLo, kRhoClampHi);
  return rho * std::log(rho / r) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r));
}

double sum_squared_weights(const Network& net) {
  double s = 0.0;
  for (const Matrix& w : net.weights) s += w.squaredNorm();
  return 0.5 * s;
}

CostBreakdown assemble_cost(const Network& net, const ForwardCache& cache, MatrixRef targets,
                            const CostConfig& cfg) {
  const Matrix& output = cache.x.back();
  if (targets.rows() != output.rows() || targets.cols() != output.cols()) {
    throw StructuralError("target shape does not match network output");
  }
  CostBreakdown breakdown;
  breakdown.mse = (output - targets).squaredNorm() /
                  static_cast<double>(output.rows() * output.cols());
  breakdown.l2 = sum_squared_weights(net);
  const std::vector<double> rho_hat = layer_mean_abs_activation(cache);
  for (std::size_t l = 0; l + 1 < cache.f.size(); ++l) {
    breakdown.kl += kl_divergence(cfg.rho, rho_hat[l]);
  }
  breakdown.total = breakdown.mse + cfg.lambda * breakdown.l2 + cfg.beta * breakdown.kl;
  return breakdown;
}

}  // namespace

CostBreakdown cost(const Network& net, MatrixRef inputs, MatrixRef targets,
                   const CostConfig& cfg) {
  if (inputs.cols() == 0) {
    throw ArgumentError("cost requires a non-empty batch");
  }
  ForwardCache cache;
  forward_batch(net, inputs, &cache);
  return assemble_cost(net, cache, targets, cfg);
}

Gradients gradients(const Network& net, MatrixRef inputs, MatrixRef targets,
                    const CostConfig& cfg, CostBreakdown* cost_out) {
  if (inputs.cols() == 0) {
    throw ArgumentError("gradients require a non-empty batch");
  }
  ForwardCache cache;
  forward_batch(net, inputs, &cache);
  if (cost_out) {
    *cost_out = assemble_cost(net, cache, targets, cfg);
  }

  const std::size_t layer_count = net.layer_count();
  const Matrix& output = cache.x.back();
  const std::vector<double> rho_hat = layer_mean_abs_activation(cache);

  Gradients grads;
  grads.weights.resize(layer_count);
  grads.biases.resize(layer_count);

  // dE/d(output); targets checked by assemble_cost or here.
  if (targets.rows() != output.rows() || targets.cols() != output.cols()) {
    throw StructuralError("target shape does not match network output");
  }
  Matrix dx = (2.0 / static_cast<double>(output.rows() * output.cols())) * (output - targets);

  for (std::size_t l = layer_count; l-- > 0;) {
    const LayerSpec& spec = net.layers[l];
    // Gradient w.r.t. f(z): downstream path through the scaled output plus,
    // for non-output layers, the sparsity penalty through |f|.
    Matrix df;
    if (spec.output_scale == 1.0) {
      df = std::move(dx);
    } else {
      df = spec.output_scale * dx;
    }
    if (l + 1 < layer_count && cfg.beta != 0.0) {
      const double r = rho_hat[l];
      if (r > kRhoClampLo && r < kRhoClampHi) {
        const double dkl = -cfg.rho / r + (1.0 - cfg.rho) / (1.0 - r);
        const double coef =
            cfg.beta * dkl / static_cast<double>(cache.f[l].rows() * cache.f[l].cols());
        df.array() += coef * cache.f[l].unaryExpr([](double v) {
                                return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                              }).array();
      }
    }
    const Matrix fprime = cache.z[l].unaryExpr(
        [&spec](double v) { return activate_derivative(spec.activation, v); });
    const Matrix dz = df.cwiseProduct(fprime);
    grads.weights[l] = dz * cache.x[l].transpose() + cfg.lambda * net.weights[l];
    grads.biases[l] = dz.rowwise().sum();
    if (l > 0) {
      dx = net.weights[l].transpose() * dz;
    }
  }
  return grads;
}

namespace {

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  long step = 0;

  explicit AdamState(const Network& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      mw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      vw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      mb.push_back(Vector::Zero(net.biases[l].size()));
      vb.push_back(Vector::Zero(net.biases[l].size()));
    }
  }

  void update(Network& net, const Gradients& g, double lr) {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      mw[l] = b1 * mw[l] + (1.0 - b1) * g.weights[l];
      vw[l].array() = b2 * vw[l].array() + (1.0 - b2) * g.weights[l].array().square();
      net.weights[l].array() -=
          lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
      mb[l] = b1 * mb[l] + (1.0 - b1) * g.biases[l];
      vb[l].array() = b2 * vb[l].array() + (1.0 - b2) * g.biases[l].array().square();
      net.biases[l].array() -=
          lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
    }
  }
};

Matrix select_columns(MatrixRef m, const std::vector<Index>& idx, Index begin, Index end) {
  Matrix out(m.rows(), end - begin);
  for (Index j = begin; j < end; ++j) {
    out.col(j - begin) = m.col(idx[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace

TrainResult train(const Network& net, MatrixRef inputs, MatrixRef targets,
                  const CostConfig& cfg, const TrainOptions& opt) {
  if (inputs.cols() == 0) {
    throw ArgumentError("training set is empty");
  }
  if (inputs.cols() != targets.cols()) {
    throw StructuralError("input and target counts differ");
  }
  if (opt.validation_fraction < 0.0 || opt.validation_fraction > 0.9) {
    throw ArgumentError("validation_fraction must lie in [0, 0.9]");
  }

  Rng rng(opt.seed);
  const Index total = inputs.cols();
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);

  const Index val_count = static_cast<Index>(
      std::floor(opt.validation_fraction * static_cast<double>(total)));
  const Index train_count = total - val_count;
  if (train_count < 1) {
    throw ArgumentError("validation split leaves no training samples");
  }

  const Matrix train_x = select_columns(inputs, order, 0, train_count);
  const Matrix train_t = select_columns(targets, order, 0, train_count);
  const Matrix val_x = val_count > 0 ? select_columns(inputs, order, train_count, total) : Matrix();
  const Matrix val_t = val_count > 0 ? select_columns(targets, order, train_count, total) : Matrix();
  const bool has_val = val_count > 0;

  TrainResult result;
  result.net = net;
  AdamState adam(result.net);

  auto evaluate = [&](Index epoch) -> EpochStats {
    EpochStats stats;
    stats.epoch = epoch;
    const CostBreakdown train_cost = cost(result.net, train_x, train_t, cfg);
    stats.train_loss = train_cost.total;
    stats.mse = train_cost.mse;
    stats.l2 = train_cost.l2;
    stats.kl = train_cost.kl;
    stats.val_loss = has_val ? cost(result.net, val_x, val_t, cfg).total : train_cost.total;
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
    }
    return stats;
  };

  EpochStats initial = evaluate(0);
  result.history.push_back(initial);
  result.best_val_loss = initial.val_loss;
  result.best_epoch = 0;
  Network best = result.net;

  const Index batch_size = std::max<Index>(1, opt.batch_size);
  std::vector<Index> train_order(static_cast<std::size_t>(train_count));
  std::iota(train_order.begin(), train_order.end(), Index{0});

  Index stale_epochs = 0;
  for (Index epoch = 1; epoch <= opt.epochs; ++epoch) {
    rng.shuffle(train_order);
    for (Index start = 0; start < train_count; start += batch_size) {
      const Index stop = std::min(train_count, start + batch_size);
      const Matrix bx = select_columns(train_x, train_order, start, stop);
      const Matrix bt = select_columns(train_t, train_order, start, stop);
      const Gradients g = gradients(result.net, bx, bt, cfg);
      adam.update(result.net, g, opt.learning_rate);
    }
    const EpochStats stats = evaluate(epoch);
    result.history.push_back(stats);
    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      best = result.net;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (opt.patience > 0 && stale_epochs >= opt.patience) break;
    }
  }

  result.net = std::move(best);
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(history.size());
  for (const EpochStats& s : history) {
    rows.push_back({std::to_string(s.epoch), io::format_double(s.train_loss),
                    io::format_double(s.val_loss), io::format_double(s.mse),
                    io::format_double(s.l2), io::format_double(s.kl)});
  }
  io::write_csv(path, {"epoch", "train_loss", "val_loss", "mse", "l2", "kl"}, rows);
}

}  // namespace obrul::neural
