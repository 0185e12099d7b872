#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hsicd/tensor.hpp"

namespace hsicd {

enum class Activation { relu, linear };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct ConvShape {
  std::size_t kernel_size = 3;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Activation activation = Activation::linear;

  std::size_t weight_count() const { return out_channels * in_channels * kernel_size * kernel_size; }
  std::size_t fan_in() const { return in_channels * kernel_size * kernel_size; }
  bool operator==(const ConvShape&) const = default;
};

// Stride-1 "same" convolution with zero padding of (n-1)/2 per border.
// Weights are stored [out][in][ky][kx].
class ConvLayer {
 public:
  explicit ConvLayer(ConvShape shape);
  ConvLayer(ConvShape shape, std::vector<double> weights, std::vector<double> biases);

  const ConvShape& shape() const { return shape_; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> biases() { return biases_; }
  std::span<const double> biases() const { return biases_; }

  std::size_t weight_index(std::size_t out, std::size_t in, std::size_t ky, std::size_t kx) const {
    const std::size_t n = shape_.kernel_size;
    return ((out * shape_.in_channels + in) * n + ky) * n + kx;
  }
  double weight(std::size_t out, std::size_t in, std::size_t ky, std::size_t kx) const {
    return weights_[weight_index(out, in, ky, kx)];
  }

  bool operator==(const ConvLayer&) const = default;

 private:
  ConvShape shape_;
  std::vector<double> weights_;
  std::vector<double> biases_;
};

struct ConvGradients {
  Tensor input;  // empty when not requested
  std::vector<double> weights;
  std::vector<double> biases;
};

Tensor conv_forward(const ConvLayer& layer, const Tensor& input);

// `grad_out` is dLoss/d(layer output), i.e. after the activation.
ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& grad_out);

// Same as above, reusing the forward output instead of recomputing it.
ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& output,
                            const Tensor& grad_out, bool want_input_grad = true);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Mean squared error and its gradient with respect to `pred`.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg)
      : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

// Bias-corrected Adam update in place; increments state.step.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// He-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)], zero biases.
ConvLayer init_weights(const ConvShape& shape, std::uint64_t seed);

}  // namespace hsicd
