#include "hsicd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hsicd/parallel.hpp"

namespace hsicd {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

ConvLayer::ConvLayer(ConvShape shape)
    : ConvLayer(shape, std::vector<double>(shape.weight_count(), 0.0),
                std::vector<double>(shape.out_channels, 0.0)) {}

ConvLayer::ConvLayer(ConvShape shape, std::vector<double> weights, std::vector<double> biases)
    : shape_(shape), weights_(std::move(weights)), biases_(std::move(biases)) {
  if (shape_.kernel_size == 0 || shape_.kernel_size % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd");
  }
  if (shape_.in_channels == 0 || shape_.out_channels == 0) {
    throw std::invalid_argument("channel counts must be positive");
  }
  if (weights_.size() != shape_.weight_count() || biases_.size() != shape_.out_channels) {
    throw std::invalid_argument("parameter array lengths do not match layer shape");
  }
}

namespace {

// Weights regrouped as [ky][kx][out][in] so the inner loops run over
// contiguous input-channel vectors.
std::vector<double> tap_major_weights(const ConvLayer& layer) {
  const auto& s = layer.shape();
  const std::size_t n = s.kernel_size;
  std::vector<double> packed(s.weight_count());
  for (std::size_t o = 0; o < s.out_channels; ++o)
    for (std::size_t i = 0; i < s.in_channels; ++i)
      for (std::size_t ky = 0; ky < n; ++ky)
        for (std::size_t kx = 0; kx < n; ++kx)
          packed[((ky * n + kx) * s.out_channels + o) * s.in_channels + i] = layer.weight(o, i, ky, kx);
  return packed;
}

// Valid tap range [lo, hi) for an output coordinate `pos` along an axis of
// length `extent`, given padding `pad`.
struct TapRange {
  std::size_t lo, hi;
};
TapRange taps(std::size_t pos, std::size_t extent, std::size_t n, std::size_t pad) {
  const std::size_t lo = pos >= pad ? 0 : pad - pos;
  const std::size_t hi = std::min(n, extent + pad - pos);
  return {lo, hi};
}

}  // namespace

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
  const auto& s = layer.shape();
  if (input.channels() != s.in_channels) {
    throw std::invalid_argument("conv_forward: input has " + std::to_string(input.channels()) +
                                " channels, layer expects " + std::to_string(s.in_channels));
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t n = s.kernel_size;
  const std::size_t pad = (n - 1) / 2;
  const std::size_t cin = s.in_channels;
  const std::size_t cout = s.out_channels;
  const auto packed = tap_major_weights(layer);
  const auto bias = layer.biases();
  Tensor out(h, w, cout);

  parallel_for(h, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> acc(cout);
    for (std::size_t y = row_begin; y < row_end; ++y) {
      const auto ry = taps(y, h, n, pad);
      for (std::size_t x = 0; x < w; ++x) {
        const auto rx = taps(x, w, n, pad);
        std::copy(bias.begin(), bias.end(), acc.begin());
        for (std::size_t ky = ry.lo; ky < ry.hi; ++ky) {
          for (std::size_t kx = rx.lo; kx < rx.hi; ++kx) {
            const double* in = input.pixel(y + ky - pad, x + kx - pad).data();
            const double* wt = packed.data() + (ky * n + kx) * cout * cin;
            for (std::size_t o = 0; o < cout; ++o) {
              const double* wo = wt + o * cin;
              double sum = 0.0;
              for (std::size_t i = 0; i < cin; ++i) sum += wo[i] * in[i];
              acc[o] += sum;
            }
          }
        }
        auto dst = out.pixel(y, x);
        for (std::size_t o = 0; o < cout; ++o) {
          dst[o] = s.activation == Activation::relu ? std::max(0.0, acc[o]) : acc[o];
        }
      }
    }
  });
  return out;
}

ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& grad_out) {
  return conv_backward(layer, input, conv_forward(layer, input), grad_out, true);
}

ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& output,
                            const Tensor& grad_out, bool want_input_grad) {
  const auto& s = layer.shape();
  if (input.channels() != s.in_channels) {
    throw std::invalid_argument("conv_backward: input channel mismatch");
  }
  if (!grad_out.same_shape(output) || grad_out.channels() != s.out_channels ||
      !grad_out.same_spatial(input)) {
    throw std::invalid_argument("conv_backward: gradient shape mismatch");
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t n = s.kernel_size;
  const std::size_t pad = (n - 1) / 2;
  const std::size_t cin = s.in_channels;
  const std::size_t cout = s.out_channels;

  // Gradient with respect to the pre-activation sum.
  Tensor g = grad_out;
  if (s.activation == Activation::relu) {
    auto gv = g.values();
    const auto ov = output.values();
    for (std::size_t k = 0; k < gv.size(); ++k) {
      if (!(ov[k] > 0.0)) gv[k] = 0.0;
    }
  }

  ConvGradients grads;
  grads.biases.assign(cout, 0.0);
  for (std::size_t p = 0; p < h * w; ++p) {
    const double* gp = g.values().data() + p * cout;
    for (std::size_t o = 0; o < cout; ++o) grads.biases[o] += gp[o];
  }

  // Weight gradients, partitioned by output channel; each entry sums over
  // pixels in raster order regardless of the partition.
  std::vector<double> packed_grad(s.weight_count(), 0.0);
  parallel_for(cout, [&](std::size_t o_begin, std::size_t o_end) {
    for (std::size_t y = 0; y < h; ++y) {
      const auto ry = taps(y, h, n, pad);
      for (std::size_t x = 0; x < w; ++x) {
        const auto rx = taps(x, w, n, pad);
        const double* gp = g.pixel(y, x).data();
        for (std::size_t ky = ry.lo; ky < ry.hi; ++ky) {
          for (std::size_t kx = rx.lo; kx < rx.hi; ++kx) {
            const double* in = input.pixel(y + ky - pad, x + kx - pad).data();
            double* gw = packed_grad.data() + (ky * n + kx) * cout * cin;
            for (std::size_t o = o_begin; o < o_end; ++o) {
              const double go = gp[o];
              if (go == 0.0) continue;
              double* gwo = gw + o * cin;
              for (std::size_t i = 0; i < cin; ++i) gwo[i] += go * in[i];
            }
          }
        }
      }
    }
  });
  grads.weights.assign(s.weight_count(), 0.0);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t i = 0; i < cin; ++i)
      for (std::size_t ky = 0; ky < n; ++ky)
        for (std::size_t kx = 0; kx < n; ++kx)
          grads.weights[layer.weight_index(o, i, ky, kx)] =
              packed_grad[((ky * n + kx) * cout + o) * cin + i];

  if (want_input_grad) {
    const auto packed = tap_major_weights(layer);
    grads.input = Tensor(h, w, cin);
    parallel_for(h, [&](std::size_t row_begin, std::size_t row_end) {
      for (std::size_t yy = row_begin; yy < row_end; ++yy) {
        // Output row y = yy - ky + pad must lie in [0, h).
        const std::size_t ky_lo = yy + pad >= h ? yy + pad - h + 1 : 0;
        const std::size_t ky_hi = std::min(n, yy + pad + 1);
        for (std::size_t xx = 0; xx < w; ++xx) {
          const std::size_t kx_lo = xx + pad >= w ? xx + pad - w + 1 : 0;
          const std::size_t kx_hi = std::min(n, xx + pad + 1);
          double* gi = grads.input.pixel(yy, xx).data();
          for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
            for (std::size_t kx = kx_lo; kx < kx_hi; ++kx) {
              const double* gp = g.pixel(yy + pad - ky, xx + pad - kx).data();
              const double* wt = packed.data() + (ky * n + kx) * cout * cin;
              for (std::size_t o = 0; o < cout; ++o) {
                const double go = gp[o];
                if (go == 0.0) continue;
                const double* wo = wt + o * cin;
                for (std::size_t i = 0; i < cin; ++i) gi[i] += go * wo[i];
              }
            }
          }
        }
      }
    });
  }
  return grads;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  if (pred.size() == 0) {
    throw std::invalid_argument("mse_loss: empty tensors");
  }
  LossResult result{0.0, Tensor(pred.height(), pred.width(), pred.channels())};
  const auto p = pred.values();
  const auto t = target.values();
  auto g = result.grad.values();
  const double count = static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    sum += d * d;
    g[i] = 2.0 * d / count;
  }
  result.loss = sum / count;
  return result;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    m = c.beta1 * m + (1.0 - c.beta1) * grads[k];
    v = c.beta2 * v + (1.0 - c.beta2) * grads[k] * grads[k];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

ConvLayer init_weights(const ConvShape& shape, std::uint64_t seed) {
  ConvLayer layer(shape);
  const double bound = std::sqrt(6.0 / static_cast<double>(shape.fan_in()));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& wv : layer.weights()) wv = dist(rng);
  return layer;
}

}  // namespace hsicd
