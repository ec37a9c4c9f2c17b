#pragma once

#include "core/wavetable.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nwt {

/// Embedding coordinates produced by the encoder.
class LatentVector {
public:
  LatentVector() = default;
  explicit LatentVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

private:
  std::vector<double> values_;
};

/// Fully connected layer, weights row-major (out x in). Every layer uses the
/// same saturating odd activation (tanh, kept strictly inside (-1, 1)).
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

inline constexpr const char* kActivationName = "tanh";

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::uint64_t epochs_trained = 0;
  double final_training_loss = 0.0;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct AutoencoderModel {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  std::size_t latent_dim = 0;
  ModelMetadata metadata;

  /// Encoder input width; equals the decoder output width.
  std::size_t signal_length() const { return encoder.empty() ? 0 : encoder.front().in; }
  std::size_t parameter_count() const;

  /// Checks the dimension chain and finiteness. Throws DimensionMismatch
  /// naming the offending layer.
  void validate() const;

  friend bool operator==(const AutoencoderModel&, const AutoencoderModel&) = default;
};

/// Same layout as the model; holds d(loss)/d(parameter).
struct Gradients {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
};

struct TrainingConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 16;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 16;
  std::vector<std::size_t> hidden_dims{256, 64};
  double holdout_fraction = 0.125;
  std::size_t phases_per_shape = 32;
  /// Signal width; 512 for real models, smaller only in gradient checks.
  std::size_t signal_length = kWaveformLength;

  void validate() const;
};

struct CorpusItem {
  Waveform waveform;
  Shape label;
};

/// Every shape at phases k / phases_per_shape, normalized. The seed is
/// accepted for future augmentation; the base corpus does not depend on it.
std::vector<CorpusItem> gen_corpus(std::uint64_t seed, std::size_t phases_per_shape);

AutoencoderModel init_model(const TrainingConfig& config);

LatentVector encode(const AutoencoderModel& model, const Waveform& w);
Waveform decode(const AutoencoderModel& model, const LatentVector& z);

double loss_mse(std::span<const double> pred, std::span<const double> target);

struct BackpropResult {
  Gradients gradients;
  double loss = 0.0;
};

/// Analytic gradient of the mean reconstruction MSE over `batch`.
BackpropResult backprop(const AutoencoderModel& model, std::span<const Waveform> batch);

/// Mean reconstruction MSE over `batch` without gradients.
double batch_loss(const AutoencoderModel& model, std::span<const Waveform> batch);

struct StepResult {
  AutoencoderModel model;
  double loss = 0.0;  // before the update
};

StepResult train_step(const AutoencoderModel& model, std::span<const Waveform> batch,
                      double learning_rate);

struct TrainResult {
  AutoencoderModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
  std::optional<double> holdout_mse;
  std::size_t train_count = 0;
  std::size_t holdout_count = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

TrainResult train(const TrainingConfig& config, const EpochCallback& on_epoch = {});

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

/// Compares backprop against central finite differences on a small random
/// 8-4-2-4-8 model.
GradcheckReport gradient_check(std::uint64_t seed, double step = 1e-5);

std::string model_to_json(const AutoencoderModel& model);
AutoencoderModel model_from_json(std::string_view text);
void save_model(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_model(const std::filesystem::path& path);

}  // namespace nwt
