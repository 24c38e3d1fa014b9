#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "obrul/types.hpp"

namespace obrul::neural {

enum class Activation { kSigmoid, kElu, kRelu, kLinear };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

double activate(Activation kind, double z);
double activate_derivative(Activation kind, double z);

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::kLinear;
  double output_scale = 1.0;  // layer output is output_scale * f(z)
};

struct Network {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;  // out_dim x in_dim
  std::vector<Vector> biases;   // out_dim

  std::size_t layer_count() const { return layers.size(); }
  Index input_dim() const { return layers.front().in_dim; }
  Index output_dim() const { return layers.back().out_dim; }

  /// Dimension compatibility and finiteness; throws StructuralError.
  void validate() const;
};

/// Seeded uniform init in +-sqrt(6/(in+out)); biases zero.
Network make_network(std::span<const LayerSpec> layers, std::uint64_t seed);

/// Per-layer caches from a batch forward pass. Columns are samples.
/// x[0] is the input; x[l+1] = scale_l * f[l]; f[l] = activation(z[l]).
struct ForwardCache {
  std::vector<Matrix> z;
  std::vector<Matrix> f;
  std::vector<Matrix> x;
};

Matrix forward_batch(const Network& net, MatrixRef inputs, ForwardCache* cache = nullptr);
Vector forward(const Network& net, VectorRef input);

struct CostConfig {
  double lambda = 1e-4;  // L2 weight
  double beta = 1e-2;    // sparsity weight
  double rho = 0.05;     // target average activation
};

struct CostBreakdown {
  double total = 0.0;
  double mse = 0.0;  // mean over samples and output entries
  double l2 = 0.0;   // half sum of squared weights (unweighted)
  double kl = 0.0;   // summed KL divergence over non-output layers (unweighted)
};

/// total = mse + lambda * l2 + beta * kl. The average activation of layer l
/// is the mean of |f(z)| over units and samples, clamped to
/// [1e-6, 1 - 1e-6] before the KL logs; the output layer carries no
/// sparsity term.
CostBreakdown cost(const Network& net, MatrixRef inputs, MatrixRef targets,
                   const CostConfig& cfg);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Analytic gradient of the full cost, including the L2 term and the
/// sparsity term differentiated through |f(z)| (subgradient 0 at f(z) = 0).
Gradients gradients(const Network& net, MatrixRef inputs, MatrixRef targets,
                    const CostConfig& cfg, CostBreakdown* cost_out = nullptr);

struct TrainOptions {
  double learning_rate = 1e-3;
  Index batch_size = 32;
  Index epochs = 2000;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;  // in [0, 0.9]
  Index patience = 100;              // epochs without improvement; <= 0 disables
};

struct EpochStats {
  Index epoch = 0;  // 0 is the pre-training evaluation
  double train_loss = 0.0;
  double val_loss = 0.0;
  double mse = 0.0;
  double l2 = 0.0;
  double kl = 0.0;
};

struct TrainResult {
  Network net;  // parameters of the best validation epoch
  std::vector<EpochStats> history;
  double best_val_loss = 0.0;
  Index best_epoch = 0;
};

/// Mini-batch Adam (moment decay 0.9/0.999, epsilon 1e-8), deterministic for
/// a fixed seed. Throws DivergenceError naming the epoch on non-finite loss.
TrainResult train(const Network& net, MatrixRef inputs, MatrixRef targets,
                  const CostConfig& cfg, const TrainOptions& opt);

/// CSV export: epoch,train_loss,val_loss,mse,l2,kl.
void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path);

}  // namespace obrul::neural
