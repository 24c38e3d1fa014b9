#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "obrul/neural.hpp"
#include "obrul/preprocess.hpp"
#include "obrul/types.hpp"

namespace obrul::models {

namespace fs = std::filesystem;

struct AeArch {
  Index input_dim = 176;
  Index enc_hidden1 = 64;
  Index enc_hidden2 = 16;
  Index bottleneck = 4;
  Index dec_hidden = 64;
};

/// Five dense layers split 3/2: the encoder compresses to the bottleneck
/// (sigmoid, elu, elu), the decoder restores the input (elu, elu with the
/// final output scaled by 3).
struct AeModel {
  neural::Network encoder;
  neural::Network decoder;
  Index bottleneck_dim = 4;
  preprocess::NormalizationStats normalization;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Joint reconstruction training on (x, x) pairs. The seeded shuffle puts
/// the first (1 - validation_fraction) of columns into training; the
/// remainder validates (default split 50/50 via TrainOptions).
AeModel train_autoencoder(MatrixRef columns, const AeArch& arch,
                          const neural::CostConfig& cfg, const neural::TrainOptions& opt,
                          const preprocess::NormalizationStats& normalization,
                          std::vector<neural::EpochStats>* history = nullptr);

Vector encode(const AeModel& model, VectorRef column);
Matrix encode_all(const AeModel& model, MatrixRef columns);
Vector decode(const AeModel& model, VectorRef features);

struct FfnnArch {
  Index input_dim = 4;
  Index hidden1 = 8;
  Index hidden2 = 4;
};

/// Three dense layers (elu, elu, relu) regressing the normalized RUL.
struct FfnnModel {
  neural::Network net;
  double rul_max_s = 0.0;  // seconds corresponding to a normalized output of 1
  double train_loss = 0.0;
  double val_loss = 0.0;
};

FfnnModel train_ffnn(MatrixRef features, VectorRef labels_normalized, const FfnnArch& arch,
                     const neural::CostConfig& cfg, const neural::TrainOptions& opt,
                     double rul_max_s, std::vector<neural::EpochStats>* history = nullptr);

struct RulEstimate {
  double normalized = 0.0;
  double seconds = 0.0;
};

RulEstimate estimate_rul(const FfnnModel& model, VectorRef features);

/// Self-describing text format with a trailing 64-bit checksum; writing the
/// same model twice yields byte-identical files.
void save_model(const AeModel& model, const fs::path& path,
                const std::string& created = "unspecified");
void save_model(const FfnnModel& model, const fs::path& path,
                const std::string& created = "unspecified");

AeModel load_ae_model(const fs::path& path);
FfnnModel load_ffnn_model(const fs::path& path);

}  // namespace obrul::models
