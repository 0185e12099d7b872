#include "hsicd/ffcae.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace hsicd {

namespace {

bool odd(std::size_t n) { return n % 2 == 1; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_channels(const Tensor& t, std::size_t expected, const char* what) {
  if (t.channels() != expected) {
    throw std::invalid_argument(std::string(what) + ": got " + std::to_string(t.channels()) +
                                " channels, model expects " + std::to_string(expected));
  }
}

}  // namespace

void FfcaeConfig::validate() const {
  if (!odd(n1) || !odd(n2) || !odd(n3)) {
    throw std::invalid_argument("FFCAE kernel sizes must be odd");
  }
  if (f1 == 0 || f2 == 0 || f3 == 0) {
    throw std::invalid_argument("FFCAE filter counts must be at least 1");
  }
  if (epochs == 0) {
    throw std::invalid_argument("FFCAE epochs must be at least 1");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("FFCAE learning rate must be positive");
  }
}

const char* layer_name(FfcaeLayer layer) {
  switch (layer) {
    case FfcaeLayer::enc_a: return "enc_a";
    case FfcaeLayer::enc_b: return "enc_b";
    case FfcaeLayer::enc_hi: return "enc_hi";
    case FfcaeLayer::dec_a: return "dec_a";
    case FfcaeLayer::dec_b: return "dec_b";
    case FfcaeLayer::dec_out: return "dec_out";
  }
  return "?";
}

std::array<ConvShape, kFfcaeLayerCount> FfcaeModel::topology(const FfcaeConfig& c, std::size_t bands) {
  const std::size_t low = c.f1 + c.f2;
  const std::size_t code = c.code_channels();
  return {{
      {c.n1, bands, c.f1, Activation::relu},
      {c.n2, bands, c.f2, Activation::relu},
      {c.n3, low, c.f3, Activation::relu},
      {c.n1, code, c.f1, Activation::relu},
      {c.n2, code, c.f2, Activation::relu},
      {c.n3, low, bands, Activation::linear},
  }};
}

std::uint64_t FfcaeModel::layer_seed(std::uint64_t seed, FfcaeLayer layer) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(layer) + 1));
}

FfcaeModel::FfcaeModel(FfcaeConfig config, std::size_t bands, Layers layers)
    : config_(config), bands_(bands), layers_(std::move(layers)) {
  config_.validate();
  if (bands_ == 0) {
    throw std::invalid_argument("FFCAE band count must be positive");
  }
  const auto shapes = topology(config_, bands_);
  for (std::size_t k = 0; k < kFfcaeLayerCount; ++k) {
    if (!(layers_[k].shape() == shapes[k])) {
      throw std::invalid_argument(std::string("layer ") + layer_name(static_cast<FfcaeLayer>(k)) +
                                  " does not match the configured topology");
    }
  }
}

FfcaeModel FfcaeModel::initialize(const FfcaeConfig& config, std::size_t bands) {
  config.validate();
  const auto shapes = topology(config, bands);
  auto make = [&](FfcaeLayer l) {
    return init_weights(shapes[static_cast<std::size_t>(l)], layer_seed(config.seed, l));
  };
  return FfcaeModel(config, bands,
                    {make(FfcaeLayer::enc_a), make(FfcaeLayer::enc_b), make(FfcaeLayer::enc_hi),
                     make(FfcaeLayer::dec_a), make(FfcaeLayer::dec_b), make(FfcaeLayer::dec_out)});
}

FfcaeTrace forward(const FfcaeModel& model, const Tensor& image) {
  require_channels(image, model.bands(), "encode");
  FfcaeTrace t;
  t.a = conv_forward(model.layer(FfcaeLayer::enc_a), image);
  t.b = conv_forward(model.layer(FfcaeLayer::enc_b), image);
  t.low = concat_channels(t.a, t.b);
  t.hi = conv_forward(model.layer(FfcaeLayer::enc_hi), t.low);
  t.code = concat_channels(t.low, t.hi);
  t.dec_a = conv_forward(model.layer(FfcaeLayer::dec_a), t.code);
  t.dec_b = conv_forward(model.layer(FfcaeLayer::dec_b), t.code);
  t.dec_cat = concat_channels(t.dec_a, t.dec_b);
  t.output = conv_forward(model.layer(FfcaeLayer::dec_out), t.dec_cat);
  return t;
}

Tensor encode(const FfcaeModel& model, const Tensor& image) {
  require_channels(image, model.bands(), "encode");
  const Tensor low = concat_channels(conv_forward(model.layer(FfcaeLayer::enc_a), image),
                                     conv_forward(model.layer(FfcaeLayer::enc_b), image));
  return concat_channels(low, conv_forward(model.layer(FfcaeLayer::enc_hi), low));
}

Tensor decode(const FfcaeModel& model, const Tensor& code) {
  require_channels(code, model.config().code_channels(), "decode");
  const Tensor cat = concat_channels(conv_forward(model.layer(FfcaeLayer::dec_a), code),
                                     conv_forward(model.layer(FfcaeLayer::dec_b), code));
  return conv_forward(model.layer(FfcaeLayer::dec_out), cat);
}

namespace {

// Backpropagates dLoss/d(output) through the decoder; returns dLoss/d(code).
Tensor backprop_decoder(const FfcaeModel& model, const Tensor& code, const Tensor& dec_a,
                        const Tensor& dec_b, const Tensor& dec_cat, const Tensor& output,
                        const Tensor& grad_output,
                        std::array<ConvGradients, kFfcaeLayerCount>* layer_grads) {
  const auto& c = model.config();
  auto g_out = conv_backward(model.layer(FfcaeLayer::dec_out), dec_cat, output, grad_output);
  const Tensor g_dec_a = g_out.input.slice_channels(0, c.f1);
  const Tensor g_dec_b = g_out.input.slice_channels(c.f1, c.f1 + c.f2);
  auto g_a = conv_backward(model.layer(FfcaeLayer::dec_a), code, dec_a, g_dec_a);
  auto g_b = conv_backward(model.layer(FfcaeLayer::dec_b), code, dec_b, g_dec_b);
  Tensor g_code = std::move(g_a.input);
  accumulate(g_code, g_b.input);
  if (layer_grads != nullptr) {
    g_out.input = {};
    g_a.input = {};
    g_b.input = {};
    (*layer_grads)[static_cast<std::size_t>(FfcaeLayer::dec_out)] = std::move(g_out);
    (*layer_grads)[static_cast<std::size_t>(FfcaeLayer::dec_a)] = std::move(g_a);
    (*layer_grads)[static_cast<std::size_t>(FfcaeLayer::dec_b)] = std::move(g_b);
  }
  return g_code;
}

}  // namespace

FfcaeGradients backprop(const FfcaeModel& model, const Tensor& image, const Tensor& target,
                        bool want_input_grad) {
  const auto& c = model.config();
  const FfcaeTrace t = forward(model, image);
  auto loss = mse_loss(t.output, target);

  FfcaeGradients result;
  result.loss = loss.loss;
  Tensor g_code = backprop_decoder(model, t.code, t.dec_a, t.dec_b, t.dec_cat, t.output, loss.grad,
                                   &result.layers);

  // Skip connection: the code's first f1+f2 channels are `low` itself.
  const std::size_t low_channels = c.f1 + c.f2;
  Tensor g_low = g_code.slice_channels(0, low_channels);
  const Tensor g_hi = g_code.slice_channels(low_channels, c.code_channels());
  auto g_enc_hi = conv_backward(model.layer(FfcaeLayer::enc_hi), t.low, t.hi, g_hi);
  accumulate(g_low, g_enc_hi.input);
  g_enc_hi.input = {};

  const Tensor g_a = g_low.slice_channels(0, c.f1);
  const Tensor g_b = g_low.slice_channels(c.f1, low_channels);
  auto g_enc_a = conv_backward(model.layer(FfcaeLayer::enc_a), image, t.a, g_a, want_input_grad);
  auto g_enc_b = conv_backward(model.layer(FfcaeLayer::enc_b), image, t.b, g_b, want_input_grad);
  if (want_input_grad) {
    result.input = std::move(g_enc_a.input);
    accumulate(result.input, g_enc_b.input);
    g_enc_a.input = {};
    g_enc_b.input = {};
  }
  result.layers[static_cast<std::size_t>(FfcaeLayer::enc_hi)] = std::move(g_enc_hi);
  result.layers[static_cast<std::size_t>(FfcaeLayer::enc_a)] = std::move(g_enc_a);
  result.layers[static_cast<std::size_t>(FfcaeLayer::enc_b)] = std::move(g_enc_b);
  return result;
}

LossResult decode_loss_gradient(const FfcaeModel& model, const Tensor& code, const Tensor& target) {
  require_channels(code, model.config().code_channels(), "decode");
  const Tensor dec_a = conv_forward(model.layer(FfcaeLayer::dec_a), code);
  const Tensor dec_b = conv_forward(model.layer(FfcaeLayer::dec_b), code);
  const Tensor dec_cat = concat_channels(dec_a, dec_b);
  const Tensor output = conv_forward(model.layer(FfcaeLayer::dec_out), dec_cat);
  auto loss = mse_loss(output, target);
  Tensor g_code = backprop_decoder(model, code, dec_a, dec_b, dec_cat, output, loss.grad, nullptr);
  return {loss.loss, std::move(g_code)};
}

Tensor to_tensor(const HyperCube& cube) {
  Tensor t(cube.height(), cube.width(), cube.bands());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto band = cube.band(b);
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
      t.values()[p * cube.bands() + b] = band[p];
    }
  }
  return t;
}

TrainResult train(const HyperCube& image1, const HyperCube& image2, const FfcaeConfig& config) {
  config.validate();
  if (image1.height() != image2.height() || image1.width() != image2.width() ||
      image1.bands() != image2.bands()) {
    throw std::invalid_argument("training images differ in dimensions or band count");
  }
  FfcaeModel model = FfcaeModel::initialize(config, image1.bands());
  const std::array<Tensor, 2> images{to_tensor(image1), to_tensor(image2)};

  const AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  std::array<AdamState, kFfcaeLayerCount> weight_states;
  std::array<AdamState, kFfcaeLayerCount> bias_states;
  for (std::size_t k = 0; k < kFfcaeLayerCount; ++k) {
    weight_states[k] = AdamState(model.layers()[k].weights().size(), adam);
    bias_states[k] = AdamState(model.layers()[k].biases().size(), adam);
  }

  std::vector<EpochLoss> history;
  history.reserve(config.epochs);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLoss row{epoch, 0.0, 0.0};
    for (std::size_t which = 0; which < images.size(); ++which) {
      const auto grads = backprop(model, images[which], images[which]);
      (which == 0 ? row.image1 : row.image2) = grads.loss;
      for (std::size_t k = 0; k < kFfcaeLayerCount; ++k) {
        adam_step(weight_states[k], model.layers()[k].weights(), grads.layers[k].weights);
        adam_step(bias_states[k], model.layers()[k].biases(), grads.layers[k].biases);
      }
    }
    history.push_back(row);
  }
  return {std::move(model), std::move(history)};
}

DeepFeatures extract_dfm(const FfcaeModel& model, const HyperCube& image1, const HyperCube& image2) {
  if (image1.bands() != model.bands() || image2.bands() != model.bands()) {
    throw std::invalid_argument("image band count does not match the trained model (" +
                                std::to_string(model.bands()) + " bands)");
  }
  return {encode(model, to_tensor(normalize_bands(image1))),
          encode(model, to_tensor(normalize_bands(image2)))};
}

std::string loss_history_csv(const std::vector<EpochLoss>& history) {
  std::string out = "epoch,loss_image1,loss_image2\n";
  char line[96];
  for (const auto& row : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", row.epoch, row.image1, row.image2);
    out += line;
  }
  return out;
}

}  // namespace hsicd
