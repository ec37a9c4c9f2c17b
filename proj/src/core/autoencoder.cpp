#include "core/autoencoder.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

#include <Eigen/Dense>
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace nwt {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutableRowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<const Eigen::VectorXd>;

// tanh rounds to +-1.0 for |x| > ~19; pull those back inside the open interval.
constexpr double kMaxActivation = 1.0 - 0x1.0p-53;

double activate(double x) {
  const double y = std::tanh(x);
  if (y > kMaxActivation) return kMaxActivation;
  if (y < -kMaxActivation) return -kMaxActivation;
  return y;
}

std::vector<const Layer*> all_layers(const AutoencoderModel& model) {
  std::vector<const Layer*> layers;
  for (const auto& l : model.encoder) layers.push_back(&l);
  for (const auto& l : model.decoder) layers.push_back(&l);
  return layers;
}

Matrix forward_layer(const Layer& layer, const Matrix& input) {
  const RowMajorMap w(layer.weights.data(), static_cast<Eigen::Index>(layer.out),
                      static_cast<Eigen::Index>(layer.in));
  const VectorMap b(layer.bias.data(), static_cast<Eigen::Index>(layer.out));
  Matrix z = w * input;
  z.colwise() += b;
  return z.unaryExpr(&activate);
}

Eigen::VectorXd forward_vector(std::span<const Layer> layers, std::span<const double> input) {
  Eigen::VectorXd a = VectorMap(input.data(), static_cast<Eigen::Index>(input.size()));
  for (const auto& layer : layers) {
    const RowMajorMap w(layer.weights.data(), static_cast<Eigen::Index>(layer.out),
                        static_cast<Eigen::Index>(layer.in));
    const VectorMap b(layer.bias.data(), static_cast<Eigen::Index>(layer.out));
    Eigen::VectorXd z = w * a + b;
    a = z.unaryExpr(&activate);
  }
  return a;
}

Matrix batch_matrix(std::span<const Waveform> batch, std::size_t length) {
  Matrix x(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].size() != length) {
      fail(ErrorCode::DimensionMismatch, "batch element " + std::to_string(b) + " has " +
                                             std::to_string(batch[b].size()) +
                                             " samples, model expects " + std::to_string(length));
    }
    for (std::size_t i = 0; i < length; ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = batch[b][i];
    }
  }
  return x;
}

Layer zero_like(const Layer& l) {
  return Layer{l.in, l.out, std::vector<double>(l.weights.size(), 0.0),
               std::vector<double>(l.bias.size(), 0.0)};
}

void check_layer_chain(const std::vector<Layer>& layers, const char* side, std::size_t expected_in) {
  std::size_t prev = expected_in;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = std::string(side) + " layer " + std::to_string(i);
    if (l.in == 0 || l.out == 0) fail(ErrorCode::DimensionMismatch, where + ": zero dimension");
    if (l.in != prev) {
      fail(ErrorCode::DimensionMismatch, where + ": in=" + std::to_string(l.in) +
                                             " does not match previous out=" + std::to_string(prev));
    }
    if (l.weights.size() != l.in * l.out) {
      fail(ErrorCode::DimensionMismatch, where + ": expected " + std::to_string(l.in * l.out) +
                                             " weights, got " + std::to_string(l.weights.size()));
    }
    if (l.bias.size() != l.out) {
      fail(ErrorCode::DimensionMismatch, where + ": expected " + std::to_string(l.out) +
                                             " biases, got " + std::to_string(l.bias.size()));
    }
    for (double v : l.weights) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, where + ": non-finite weight");
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, where + ": non-finite bias");
    }
    prev = l.out;
  }
}

}  // namespace

LatentVector::LatentVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorCode::InvalidArgument, "latent value " + std::to_string(i) + " is not finite");
    }
  }
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : all_layers(*this)) n += l->weights.size() + l->bias.size();
  return n;
}

void AutoencoderModel::validate() const {
  if (encoder.empty() || decoder.empty()) {
    fail(ErrorCode::DimensionMismatch, "model needs at least one encoder and one decoder layer");
  }
  if (latent_dim == 0) fail(ErrorCode::DimensionMismatch, "latent_dim must be positive");
  const std::size_t width = encoder.front().in;
  check_layer_chain(encoder, "encoder", width);
  if (encoder.back().out != latent_dim) {
    fail(ErrorCode::DimensionMismatch,
         "encoder layer " + std::to_string(encoder.size() - 1) + ": out=" +
             std::to_string(encoder.back().out) + " does not match latent_dim=" +
             std::to_string(latent_dim));
  }
  check_layer_chain(decoder, "decoder", latent_dim);
  if (decoder.back().out != width) {
    fail(ErrorCode::DimensionMismatch,
         "decoder layer " + std::to_string(decoder.size() - 1) + ": out=" +
             std::to_string(decoder.back().out) + " does not match encoder input " +
             std::to_string(width));
  }
}

void TrainingConfig::validate() const {
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::InvalidArgument, "learning_rate must be a finite value >= 0");
  }
  if (latent_dim == 0) fail(ErrorCode::InvalidArgument, "latent_dim must be positive");
  for (auto h : hidden_dims) {
    if (h == 0) fail(ErrorCode::InvalidArgument, "hidden dims must be positive");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction <= 0.5)) {
    fail(ErrorCode::InvalidArgument, "holdout_fraction must be in [0, 0.5]");
  }
  if (phases_per_shape == 0) fail(ErrorCode::InvalidArgument, "phases_per_shape must be positive");
  if (signal_length < 4) fail(ErrorCode::InvalidArgument, "signal_length must be at least 4");
}

std::vector<CorpusItem> gen_corpus(std::uint64_t /*seed*/, std::size_t phases_per_shape) {
  if (phases_per_shape == 0) {
    fail(ErrorCode::InvalidArgument, "phases_per_shape must be at least 1");
  }
  std::vector<CorpusItem> corpus;
  corpus.reserve(4 * phases_per_shape);
  for (Shape shape : kAllShapes) {
    for (std::size_t k = 0; k < phases_per_shape; ++k) {
      const double phase = static_cast<double>(k) / static_cast<double>(phases_per_shape);
      corpus.push_back({preset_waveform(shape, phase), shape});
    }
  }
  return corpus;
}

AutoencoderModel init_model(const TrainingConfig& config) {
  config.validate();
  std::vector<std::size_t> dims{config.signal_length};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.latent_dim);

  Rng rng(config.seed);
  auto make_layer = [&rng](std::size_t in, std::size_t out) {
    Layer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& w : l.weights) w = rng.uniform(-scale, scale);
    return l;
  };

  AutoencoderModel model;
  model.latent_dim = config.latent_dim;
  model.metadata.seed = config.seed;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    model.encoder.push_back(make_layer(dims[i], dims[i + 1]));
  }
  for (std::size_t i = dims.size() - 1; i > 0; --i) {
    model.decoder.push_back(make_layer(dims[i], dims[i - 1]));
  }
  return model;
}

LatentVector encode(const AutoencoderModel& model, const Waveform& w) {
  if (model.encoder.empty()) fail(ErrorCode::DimensionMismatch, "model has no encoder");
  if (w.size() != model.signal_length()) {
    fail(ErrorCode::DimensionMismatch, "waveform has " + std::to_string(w.size()) +
                                           " samples, encoder expects " +
                                           std::to_string(model.signal_length()));
  }
  const Eigen::VectorXd z = forward_vector(model.encoder, w.samples());
  return LatentVector(std::vector<double>(z.data(), z.data() + z.size()));
}

Waveform decode(const AutoencoderModel& model, const LatentVector& z) {
  if (model.decoder.empty()) fail(ErrorCode::DimensionMismatch, "model has no decoder");
  if (z.size() != model.latent_dim) {
    fail(ErrorCode::DimensionMismatch, "latent has " + std::to_string(z.size()) +
                                           " values, decoder expects " +
                                           std::to_string(model.latent_dim));
  }
  const Eigen::VectorXd y = forward_vector(model.decoder, z.values());
  return Waveform(std::vector<double>(y.data(), y.data() + y.size()));
}

double loss_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    fail(ErrorCode::DimensionMismatch, "loss inputs differ in length (" +
                                           std::to_string(pred.size()) + " vs " +
                                           std::to_string(target.size()) + ")");
  }
  if (pred.empty()) fail(ErrorCode::DimensionMismatch, "loss inputs are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double batch_loss(const AutoencoderModel& model, std::span<const Waveform> batch) {
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "batch is empty");
  Matrix a = batch_matrix(batch, model.signal_length());
  const Matrix x = a;
  for (const auto* layer : all_layers(model)) a = forward_layer(*layer, a);
  return (a - x).squaredNorm() / static_cast<double>(x.size());
}

BackpropResult backprop(const AutoencoderModel& model, std::span<const Waveform> batch) {
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "batch is empty");
  const auto layers = all_layers(model);
  const Matrix x = batch_matrix(batch, model.signal_length());

  // activations[0] is the input; activations[k + 1] the output of layer k.
  std::vector<Matrix> activations;
  activations.reserve(layers.size() + 1);
  activations.push_back(x);
  for (const auto* layer : layers) activations.push_back(forward_layer(*layer, activations.back()));

  const Matrix& y = activations.back();
  const double count = static_cast<double>(x.size());
  BackpropResult result;
  result.loss = (y - x).squaredNorm() / count;

  std::vector<Layer> grads;
  grads.reserve(layers.size());
  for (const auto* layer : layers) grads.push_back(zero_like(*layer));

  // d(loss)/d(output), then through tanh: dz = da * (1 - a^2).
  Matrix delta = (2.0 / count) * (y - x);
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Layer& layer = *layers[k];
    const Matrix& out = activations[k + 1];
    const Matrix dz = delta.array() * (1.0 - out.array().square());

    MutableRowMajorMap gw(grads[k].weights.data(), static_cast<Eigen::Index>(layer.out),
                          static_cast<Eigen::Index>(layer.in));
    gw = dz * activations[k].transpose();
    Eigen::Map<Eigen::VectorXd> gb(grads[k].bias.data(), static_cast<Eigen::Index>(layer.out));
    gb = dz.rowwise().sum();

    if (k > 0) {
      const RowMajorMap w(layer.weights.data(), static_cast<Eigen::Index>(layer.out),
                          static_cast<Eigen::Index>(layer.in));
      delta = w.transpose() * dz;
    }
  }

  const std::size_t n_enc = model.encoder.size();
  result.gradients.encoder.assign(std::make_move_iterator(grads.begin()),
                                  std::make_move_iterator(grads.begin() + static_cast<long>(n_enc)));
  result.gradients.decoder.assign(std::make_move_iterator(grads.begin() + static_cast<long>(n_enc)),
                                  std::make_move_iterator(grads.end()));
  return result;
}

StepResult train_step(const AutoencoderModel& model, std::span<const Waveform> batch,
                      double learning_rate) {
  if (!(learning_rate >= 0.0)) fail(ErrorCode::InvalidArgument, "learning_rate must be >= 0");
  auto [grads, loss] = backprop(model, batch);
  StepResult step{model, loss};
  if (learning_rate == 0.0) return step;

  auto apply = [learning_rate](std::vector<Layer>& params, const std::vector<Layer>& g) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].weights.size(); ++i) {
        params[k].weights[i] -= learning_rate * g[k].weights[i];
      }
      for (std::size_t i = 0; i < params[k].bias.size(); ++i) {
        params[k].bias[i] -= learning_rate * g[k].bias[i];
      }
    }
  };
  apply(step.model.encoder, grads.encoder);
  apply(step.model.decoder, grads.decoder);
  return step;
}

TrainResult train(const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  TrainResult result;
  result.model = init_model(config);

  std::vector<Waveform> corpus;
  if (config.signal_length == kWaveformLength) {
    for (auto& item : gen_corpus(config.seed, config.phases_per_shape)) {
      corpus.push_back(std::move(item.waveform));
    }
  } else {
    for (Shape shape : kAllShapes) {
      for (std::size_t k = 0; k < config.phases_per_shape; ++k) {
        const double phase =
            static_cast<double>(k) / static_cast<double>(config.phases_per_shape);
        corpus.push_back(normalize(gen_waveform(shape, config.signal_length, phase)));
      }
    }
  }

  // Separate stream from init_model so the split does not perturb weights.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));

  const auto holdout_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(corpus.size()) * config.holdout_fraction));
  std::vector<Waveform> holdout;
  std::vector<Waveform> training;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < holdout_count ? holdout : training).push_back(corpus[order[i]]);
  }
  result.train_count = training.size();
  result.holdout_count = holdout.size();

  std::vector<std::size_t> idx(training.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Waveform> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(idx));
    double weighted = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
      const std::size_t end = std::min(idx.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(training[idx[i]]);
      auto step = train_step(result.model, batch, config.learning_rate);
      if (!std::isfinite(step.loss)) {
        fail(ErrorCode::Diverged, "training loss became non-finite at epoch " +
                                      std::to_string(epoch) + "; lower the learning rate");
      }
      weighted += step.loss * static_cast<double>(batch.size());
      result.model = std::move(step.model);
    }
    const double epoch_loss = weighted / static_cast<double>(training.size());
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }

  result.model.metadata.seed = config.seed;
  result.model.metadata.epochs_trained = config.epochs;
  result.model.metadata.final_training_loss =
      result.loss_history.empty() ? 0.0 : result.loss_history.back();
  if (!holdout.empty()) result.holdout_mse = batch_loss(result.model, holdout);
  return result;
}

GradcheckReport gradient_check(std::uint64_t seed, double step) {
  TrainingConfig cfg;
  cfg.seed = seed;
  cfg.signal_length = 8;
  cfg.hidden_dims = {4};
  cfg.latent_dim = 2;
  AutoencoderModel model = init_model(cfg);

  // Non-zero biases so their gradients are exercised away from the init point.
  Rng rng(seed + 1);
  for (auto* side : {&model.encoder, &model.decoder}) {
    for (auto& l : *side) {
      for (auto& b : l.bias) b = rng.uniform(-0.5, 0.5);
    }
  }
  std::vector<Waveform> batch;
  for (int b = 0; b < 3; ++b) {
    std::vector<double> s(cfg.signal_length);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    batch.emplace_back(std::move(s));
  }

  const auto analytic = backprop(model, batch).gradients;
  GradcheckReport report;

  auto check = [&](std::vector<double>& params, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = batch_loss(model, batch);
      params[i] = saved - step;
      const double down = batch_loss(model, batch);
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(grads[i]), std::abs(numeric), 1e-8});
      report.max_relative_error =
          std::max(report.max_relative_error, std::abs(grads[i] - numeric) / denom);
      ++report.parameters_checked;
    }
  };
  for (std::size_t k = 0; k < model.encoder.size(); ++k) {
    check(model.encoder[k].weights, analytic.encoder[k].weights);
    check(model.encoder[k].bias, analytic.encoder[k].bias);
  }
  for (std::size_t k = 0; k < model.decoder.size(); ++k) {
    check(model.decoder[k].weights, analytic.decoder[k].weights);
    check(model.decoder[k].bias, analytic.decoder[k].bias);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json layers_to_json(const std::vector<Layer>& layers) {
  json arr = json::array();
  for (const auto& l : layers) {
    arr.push_back({{"in", l.in},
                   {"out", l.out},
                   {"activation", kActivationName},
                   {"weights", l.weights},
                   {"bias", l.bias}});
  }
  return arr;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::Malformed, where + ": missing field '" + key + "'");
  return *it;
}

std::uint64_t unsigned_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_unsigned()) {
    fail(ErrorCode::Malformed, where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<double> number_array(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) fail(ErrorCode::Malformed, where + ": field '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) {
      fail(ErrorCode::Malformed, where + ": field '" + key + "' must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<Layer> layers_from_json(const json& doc, const char* side) {
  const json& arr = field(doc, side, "model");
  if (!arr.is_array()) fail(ErrorCode::Malformed, std::string("'") + side + "' must be an array");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = std::string(side) + " layer " + std::to_string(i);
    const json& obj = arr[i];
    if (!obj.is_object()) fail(ErrorCode::Malformed, where + ": must be an object");
    const json& act = field(obj, "activation", where);
    if (!act.is_string() || act.get<std::string>() != kActivationName) {
      fail(ErrorCode::Malformed, where + ": unsupported activation (expected \"tanh\")");
    }
    Layer l;
    l.in = unsigned_field(obj, "in", where);
    l.out = unsigned_field(obj, "out", where);
    l.weights = number_array(obj, "weights", where);
    l.bias = number_array(obj, "bias", where);
    layers.push_back(std::move(l));
  }
  return layers;
}

}  // namespace

std::string model_to_json(const AutoencoderModel& model) {
  model.validate();
  json doc = {{"format", "nwae"},
              {"version", 1},
              {"latent_dim", model.latent_dim},
              {"seed", model.metadata.seed},
              {"epochs_trained", model.metadata.epochs_trained},
              {"final_training_loss", model.metadata.final_training_loss},
              {"encoder", layers_to_json(model.encoder)},
              {"decoder", layers_to_json(model.decoder)}};
  return doc.dump();
}

AutoencoderModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::Malformed, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Malformed, "model file must hold a JSON object");
  const json& format = field(doc, "format", "model");
  if (!format.is_string() || format.get<std::string>() != "nwae") {
    fail(ErrorCode::Malformed, "model file format must be \"nwae\"");
  }
  const auto version = unsigned_field(doc, "version", "model");
  if (version != 1) {
    fail(ErrorCode::VersionMismatch,
         "unsupported model version " + std::to_string(version) + " (expected 1)");
  }

  AutoencoderModel model;
  model.latent_dim = unsigned_field(doc, "latent_dim", "model");
  model.metadata.seed = unsigned_field(doc, "seed", "model");
  model.metadata.epochs_trained = unsigned_field(doc, "epochs_trained", "model");
  const json& loss = field(doc, "final_training_loss", "model");
  if (!loss.is_number()) fail(ErrorCode::Malformed, "final_training_loss must be a number");
  model.metadata.final_training_loss = loss.get<double>();
  model.encoder = layers_from_json(doc, "encoder");
  model.decoder = layers_from_json(doc, "decoder");
  model.validate();
  if (model.signal_length() != kWaveformLength) {
    fail(ErrorCode::DimensionMismatch, "encoder layer 0: in=" +
                                           std::to_string(model.signal_length()) +
                                           ", model files must use 512-sample waveforms");
  }
  return model;
}

void save_model(const AutoencoderModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

AutoencoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace nwt
