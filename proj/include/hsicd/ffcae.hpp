#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsicd/hsi_io.hpp"
#include "hsicd/nn.hpp"
#include "hsicd/tensor.hpp"

namespace hsicd {

// Feature-fusion convolutional autoencoder.
//
//   image ─┬─ enc_a (n1×n1, relu) ─┐
//          └─ enc_b (n2×n2, relu) ─┴─ low ─┬──────────────────────┐
//                                          └─ enc_hi (n3×n3, relu) ┴─ code
//   code ─┬─ dec_a (n1×n1, relu) ─┐
//         └─ dec_b (n2×n2, relu) ─┴─ dec_out (n3×n3, linear) ─ reconstruction
//
// The code layer is the concatenation [low | hi], so it carries f1+f2+f3
// channels at full spatial resolution.
struct FfcaeConfig {
  std::size_t n1 = 3;
  std::size_t n2 = 5;
  std::size_t n3 = 3;
  std::size_t f1 = 8;
  std::size_t f2 = 8;
  std::size_t f3 = 16;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  std::size_t code_channels() const { return f1 + f2 + f3; }
  void validate() const;
  bool operator==(const FfcaeConfig&) const = default;
};

enum class FfcaeLayer : std::size_t { enc_a = 0, enc_b, enc_hi, dec_a, dec_b, dec_out };
inline constexpr std::size_t kFfcaeLayerCount = 6;
const char* layer_name(FfcaeLayer layer);

class FfcaeModel {
 public:
  using Layers = std::array<ConvLayer, kFfcaeLayerCount>;

  FfcaeModel(FfcaeConfig config, std::size_t bands, Layers layers);

  // Fresh He-uniform parameters; each layer draws from its own seed derived
  // from config.seed.
  static FfcaeModel initialize(const FfcaeConfig& config, std::size_t bands);
  static std::array<ConvShape, kFfcaeLayerCount> topology(const FfcaeConfig& config, std::size_t bands);
  static std::uint64_t layer_seed(std::uint64_t seed, FfcaeLayer layer);

  const FfcaeConfig& config() const { return config_; }
  std::size_t bands() const { return bands_; }

  const ConvLayer& layer(FfcaeLayer l) const { return layers_[static_cast<std::size_t>(l)]; }
  ConvLayer& layer(FfcaeLayer l) { return layers_[static_cast<std::size_t>(l)]; }
  const Layers& layers() const { return layers_; }
  Layers& layers() { return layers_; }

  bool operator==(const FfcaeModel&) const = default;

 private:
  FfcaeConfig config_;
  std::size_t bands_;
  Layers layers_;
};

// Intermediate activations of one forward pass.
struct FfcaeTrace {
  Tensor a, b, low, hi, code;
  Tensor dec_a, dec_b, dec_cat, output;
};

Tensor encode(const FfcaeModel& model, const Tensor& image);
Tensor decode(const FfcaeModel& model, const Tensor& code);
FfcaeTrace forward(const FfcaeModel& model, const Tensor& image);

struct FfcaeGradients {
  double loss = 0.0;
  std::array<ConvGradients, kFfcaeLayerCount> layers;
  Tensor input;  // only when requested
};

// Reconstruction MSE of `image` against `target` and its exact gradients.
FfcaeGradients backprop(const FfcaeModel& model, const Tensor& image, const Tensor& target,
                        bool want_input_grad = false);

// MSE of decode(code) against `target` and the gradient with respect to `code`.
LossResult decode_loss_gradient(const FfcaeModel& model, const Tensor& code, const Tensor& target);

struct EpochLoss {
  std::size_t epoch = 0;
  double image1 = 0.0;
  double image2 = 0.0;
};

struct TrainResult {
  FfcaeModel model;
  std::vector<EpochLoss> history;
};

// Each epoch runs one full-image update on image 1, then one on image 2.
// The recorded loss of each image is the one measured in its forward pass
// before that image's update. Inputs are expected in [0, 1].
TrainResult train(const HyperCube& image1, const HyperCube& image2, const FfcaeConfig& config);

struct DeepFeatures {
  Tensor dfm1;
  Tensor dfm2;
};

// Band-normalizes each image and encodes it.
DeepFeatures extract_dfm(const FfcaeModel& model, const HyperCube& image1, const HyperCube& image2);

// BSQ cube to (H, W, bands) tensor.
Tensor to_tensor(const HyperCube& cube);

// Binary checkpoint: "FFCAE1\n", one line of JSON topology, "\n", then every
// layer's weights followed by its biases as little-endian float32, in layer order.
std::string serialize_checkpoint(const FfcaeModel& model);
FfcaeModel deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const FfcaeModel& model, const std::filesystem::path& path);
FfcaeModel load_checkpoint(const std::filesystem::path& path);

std::string loss_history_csv(const std::vector<EpochLoss>& history);

}  // namespace hsicd
