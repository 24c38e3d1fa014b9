#include "obrul/models.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/rng.hpp"

namespace obrul::models {

namespace {

using neural::Activation;
using neural::LayerSpec;
using neural::Network;

std::vector<LayerSpec> ae_layers(const AeArch& a) {
  return {
      {a.input_dim, a.enc_hidden1, Activation::kSigmoid, 1.0},
      {a.enc_hidden1, a.enc_hidden2, Activation::kElu, 1.0},
      {a.enc_hidden2, a.bottleneck, Activation::kElu, 1.0},
      {a.bottleneck, a.dec_hidden, Activation::kElu, 1.0},
      {a.dec_hidden, a.input_dim, Activation::kElu, 3.0},
  };
}

std::vector<LayerSpec> ffnn_layers(const FfnnArch& a) {
  return {
      {a.input_dim, a.hidden1, Activation::kElu, 1.0},
      {a.hidden1, a.hidden2, Activation::kElu, 1.0},
      {a.hidden2, 1, Activation::kRelu, 1.0},
  };
}

Network slice_network(const Network& net, std::size_t begin, std::size_t end) {
  Network out;
  out.layers.assign(net.layers.begin() + begin, net.layers.begin() + end);
  out.weights.assign(net.weights.begin() + begin, net.weights.begin() + end);
  out.biases.assign(net.biases.begin() + begin, net.biases.begin() + end);
  return out;
}

}  // namespace

AeModel train_autoencoder(MatrixRef columns, const AeArch& arch,
                          const neural::CostConfig& cfg, const neural::TrainOptions& opt,
                          const preprocess::NormalizationStats& normalization,
                          std::vector<neural::EpochStats>* history) {
  if (columns.rows() != arch.input_dim) {
    throw StructuralError("autoencoder input_dim " + std::to_string(arch.input_dim) +
                          " does not match data rows " + std::to_string(columns.rows()));
  }
  if (columns.cols() < 2 * arch.bottleneck) {
    throw ArgumentError("need at least " + std::to_string(2 * arch.bottleneck) +
                        " columns to train the autoencoder");
  }
  const std::vector<LayerSpec> layers = ae_layers(arch);
  const Network init = neural::make_network(layers, opt.seed);
  neural::TrainResult trained = neural::train(init, columns, columns, cfg, opt);
  if (history) *history = trained.history;

  AeModel model;
  model.encoder = slice_network(trained.net, 0, 3);
  model.decoder = slice_network(trained.net, 3, 5);
  model.bottleneck_dim = arch.bottleneck;
  model.normalization = normalization;
  model.val_loss = trained.best_val_loss;
  model.train_loss = trained.history.empty() ? 0.0 : trained.history.back().train_loss;
  for (const auto& s : trained.history) {
    if (s.epoch == trained.best_epoch) model.train_loss = s.train_loss;
  }
  return model;
}

Vector encode(const AeModel& model, VectorRef column) {
  return neural::forward(model.encoder, column);
}

Matrix encode_all(const AeModel& model, MatrixRef columns) {
  return neural::forward_batch(model.encoder, columns);
}

Vector decode(const AeModel& model, VectorRef features) {
  return neural::forward(model.decoder, features);
}

FfnnModel train_ffnn(MatrixRef features, VectorRef labels_normalized, const FfnnArch& arch,
                     const neural::CostConfig& cfg, const neural::TrainOptions& opt,
                     double rul_max_s, std::vector<neural::EpochStats>* history) {
  if (features.cols() != labels_normalized.size()) {
    throw StructuralError("feature and label counts differ");
  }
  for (Index j = 0; j < labels_normalized.size(); ++j) {
    const double y = labels_normalized[j];
    if (!(y >= 0.0 && y <= 1.0)) {
      throw ArgumentError("label " + std::to_string(j) + " = " + io::format_double(y) +
                          " lies outside [0, 1]");
    }
  }
  const std::vector<LayerSpec> layers = ffnn_layers(arch);
  const Network init = neural::make_network(layers, opt.seed);
  const Matrix targets = labels_normalized.transpose();
  neural::TrainResult trained = neural::train(init, features, targets, cfg, opt);
  if (history) *history = trained.history;

  FfnnModel model;
  model.net = trained.net;
  model.rul_max_s = rul_max_s;
  model.val_loss = trained.best_val_loss;
  model.train_loss = trained.history.empty() ? 0.0 : trained.history.back().train_loss;
  for (const auto& s : trained.history) {
    if (s.epoch == trained.best_epoch) model.train_loss = s.train_loss;
  }
  return model;
}

RulEstimate estimate_rul(const FfnnModel& model, VectorRef features) {
  const Vector out = neural::forward(model.net, features);
  RulEstimate est;
  est.normalized = out[0];
  est.seconds = est.normalized * model.rul_max_s;
  return est;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

void append_network(std::string& out, const std::string& name, const Network& net) {
  out += "network " + name + " layers " + std::to_string(net.layer_count()) + "\n";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const LayerSpec& spec = net.layers[l];
    out += "layer " + std::to_string(l) + " " + std::to_string(spec.in_dim) + " " +
           std::to_string(spec.out_dim) + " " + neural::to_string(spec.activation) + " " +
           io::format_double(spec.output_scale) + "\n";
    out += "weights";
    const Matrix& w = net.weights[l];
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) {
        out += ' ';
        out += io::format_double(w(i, j));
      }
    }
    out += "\nbiases";
    for (Index i = 0; i < net.biases[l].size(); ++i) {
      out += ' ';
      out += io::format_double(net.biases[l][i]);
    }
    out += '\n';
  }
}

void append_checksum_and_write(std::string& out, const fs::path& path) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checksum %016llx\n",
                static_cast<unsigned long long>(fnv1a64(out.data(), out.size())));
  out += buf;
  io::write_text_file(path, out);
}

struct ModelReader {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  std::string path;

  explicit ModelReader(const fs::path& file) : path(file.string()) {
    const std::string bytes = io::read_text_file(file);

    // The checksum line covers every byte before it.
    const std::size_t marker = bytes.rfind("checksum ");
    if (marker == std::string::npos || (marker != 0 && bytes[marker - 1] != '\n')) {
      throw ModelTruncatedError("model file has no checksum line: " + path);
    }
    const std::string checksum_line = io::trim(bytes.substr(marker));
    std::uint64_t stored = 0;
    {
      std::istringstream ss(checksum_line.substr(9));
      ss >> std::hex >> stored;
      if (ss.fail()) {
        throw ModelTruncatedError("unreadable checksum in " + path);
      }
    }
    const std::uint64_t actual = fnv1a64(bytes.data(), marker);
    if (stored != actual) {
      throw ModelChecksumError("checksum mismatch in " + path);
    }

    std::istringstream body(bytes.substr(0, marker));
    std::string line;
    while (std::getline(body, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }

  const std::string& next(const char* what) {
    if (pos >= lines.size()) {
      throw ModelTruncatedError(std::string("model file ended before ") + what + ": " + path);
    }
    return lines[pos++];
  }

  /// Next line must start with `key `; returns the rest.
  std::string expect(const std::string& key) {
    const std::string& line = next(key.c_str());
    if (line.rfind(key + " ", 0) != 0) {
      throw ModelIoError("expected '" + key + " ...' but found '" + line + "' in " + path);
    }
    return line.substr(key.size() + 1);
  }
};

std::vector<double> parse_number_list(const std::string& text, const std::string& path) {
  std::vector<double> values;
  std::istringstream ss(text);
  std::string token;
  while (ss >> token) {
    values.push_back(io::parse_double(token, path, 0));
  }
  return values;
}

Network read_network(ModelReader& reader, const std::string& expected_name) {
  std::istringstream head(reader.expect("network"));
  std::string name, layers_word;
  std::size_t layer_count = 0;
  head >> name >> layers_word >> layer_count;
  if (head.fail() || name != expected_name || layers_word != "layers") {
    throw ModelIoError("bad network header in " + reader.path);
  }
  Network net;
  for (std::size_t l = 0; l < layer_count; ++l) {
    std::istringstream ls(reader.expect("layer"));
    std::size_t index = 0;
    Index in_dim = 0, out_dim = 0;
    std::string activation;
    double scale = 1.0;
    ls >> index >> in_dim >> out_dim >> activation >> scale;
    if (ls.fail() || index != l) {
      throw ModelIoError("bad layer header in " + reader.path);
    }
    LayerSpec spec{in_dim, out_dim, neural::activation_from_string(activation), scale};

    const std::vector<double> w = parse_number_list(reader.expect("weights"), reader.path);
    if (static_cast<Index>(w.size()) != in_dim * out_dim) {
      throw ModelTruncatedError("weight block has wrong length in " + reader.path);
    }
    Matrix wm(out_dim, in_dim);
    for (Index i = 0; i < out_dim; ++i) {
      for (Index j = 0; j < in_dim; ++j) {
        wm(i, j) = w[static_cast<std::size_t>(i * in_dim + j)];
      }
    }
    const std::vector<double> b = parse_number_list(reader.expect("biases"), reader.path);
    if (static_cast<Index>(b.size()) != out_dim) {
      throw ModelTruncatedError("bias block has wrong length in " + reader.path);
    }
    net.layers.push_back(spec);
    net.weights.push_back(std::move(wm));
    net.biases.push_back(Eigen::Map<const Vector>(b.data(), out_dim));
  }
  net.validate();
  return net;
}

std::string read_header(ModelReader& reader, const std::string& expected_kind) {
  std::istringstream magic(reader.next("magic"));
  std::string word;
  int version = 0;
  magic >> word >> version;
  if (magic.fail() || word != "obrul-model") {
    throw ModelVersionError("not an obrul model file: " + reader.path);
  }
  if (version != kFormatVersion) {
    throw ModelVersionError("unsupported model format version " + std::to_string(version) +
                            " in " + reader.path);
  }
  const std::string kind = reader.expect("kind");
  if (kind != expected_kind) {
    throw ModelKindError("model file " + reader.path + " holds a '" + kind + "' model, '" +
                         expected_kind + "' expected");
  }
  return reader.expect("created");
}

}  // namespace

void save_model(const AeModel& model, const fs::path& path, const std::string& created) {
  std::string out;
  out += "obrul-model " + std::to_string(kFormatVersion) + "\n";
  out += "kind ae\n";
  out += "created " + created + "\n";
  out += "bottleneck " + std::to_string(model.bottleneck_dim) + "\n";
  out += "train_loss " + io::format_double(model.train_loss) + "\n";
  out += "val_loss " + io::format_double(model.val_loss) + "\n";
  out += "normalization rows " + std::to_string(model.normalization.mu.size()) +
         " fit_fraction " + io::format_double(model.normalization.fit_fraction) + "\n";
  for (Index i = 0; i < model.normalization.mu.size(); ++i) {
    out += io::format_double(model.normalization.mu[i]) + " " +
           io::format_double(model.normalization.sigma[i]) + "\n";
  }
  append_network(out, "encoder", model.encoder);
  append_network(out, "decoder", model.decoder);
  append_checksum_and_write(out, path);
}

void save_model(const FfnnModel& model, const fs::path& path, const std::string& created) {
  std::string out;
  out += "obrul-model " + std::to_string(kFormatVersion) + "\n";
  out += "kind ffnn\n";
  out += "created " + created + "\n";
  out += "rul_max_s " + io::format_double(model.rul_max_s) + "\n";
  out += "train_loss " + io::format_double(model.train_loss) + "\n";
  out += "val_loss " + io::format_double(model.val_loss) + "\n";
  append_network(out, "net", model.net);
  append_checksum_and_write(out, path);
}

AeModel load_ae_model(const fs::path& path) {
  ModelReader reader(path);
  read_header(reader, "ae");
  AeModel model;
  {
    std::istringstream bs(reader.expect("bottleneck"));
    bs >> model.bottleneck_dim;
    if (bs.fail()) throw ModelIoError("bad bottleneck line in " + reader.path);
  }
  model.train_loss = io::parse_double(reader.expect("train_loss"), reader.path, 0);
  model.val_loss = io::parse_double(reader.expect("val_loss"), reader.path, 0);
  {
    std::istringstream ns(reader.expect("normalization"));
    std::string rows_word, fit_word;
    Index rows = 0;
    double fit_fraction = 0.0;
    ns >> rows_word >> rows >> fit_word >> fit_fraction;
    if (ns.fail() || rows_word != "rows" || fit_word != "fit_fraction") {
      throw ModelIoError("bad normalization header in " + reader.path);
    }
    model.normalization.fit_fraction = fit_fraction;
    model.normalization.mu.resize(rows);
    model.normalization.sigma.resize(rows);
    for (Index i = 0; i < rows; ++i) {
      std::istringstream row(reader.next("normalization row"));
      row >> model.normalization.mu[i] >> model.normalization.sigma[i];
      if (row.fail()) throw ModelTruncatedError("bad normalization row in " + reader.path);
    }
  }
  model.encoder = read_network(reader, "encoder");
  model.decoder = read_network(reader, "decoder");
  if (model.encoder.output_dim() != model.bottleneck_dim ||
      model.decoder.input_dim() != model.bottleneck_dim ||
      model.decoder.output_dim() != model.encoder.input_dim()) {
    throw ModelIoError("encoder/decoder dimensions are inconsistent in " + reader.path);
  }
  return model;
}

FfnnModel load_ffnn_model(const fs::path& path) {
  ModelReader reader(path);
  read_header(reader, "ffnn");
  FfnnModel model;
  model.rul_max_s = io::parse_double(reader.expect("rul_max_s"), reader.path, 0);
  model.train_loss = io::parse_double(reader.expect("train_loss"), reader.path, 0);
  model.val_loss = io::parse_double(reader.expect("val_loss"), reader.path, 0);
  model.net = read_network(reader, "net");
  return model;
}

}  // namespace obrul::models
