#include "hsicd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsicd {

Tensor::Tensor(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), values_(height * width * channels, fill) {}

Tensor::Tensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (values_.size() != height * width * channels) {
    throw std::invalid_argument("tensor value count does not match shape");
  }
}

Tensor Tensor::slice_channels(std::size_t begin, std::size_t end) const {
  if (begin > end || end > channels_) {
    throw std::out_of_range("channel slice out of range");
  }
  Tensor out(height_, width_, end - begin);
  for (std::size_t p = 0; p < height_ * width_; ++p) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(p * channels_ + begin), end - begin,
                out.values_.begin() + static_cast<std::ptrdiff_t>(p * (end - begin)));
  }
  return out;
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (!a.same_spatial(b)) {
    throw std::invalid_argument("concat_channels: spatial dimensions differ");
  }
  const std::size_t ca = a.channels();
  const std::size_t cb = b.channels();
  Tensor out(a.height(), a.width(), ca + cb);
  auto dst = out.values();
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t p = 0; p < a.height() * a.width(); ++p) {
    std::copy_n(va.begin() + static_cast<std::ptrdiff_t>(p * ca), ca,
                dst.begin() + static_cast<std::ptrdiff_t>(p * (ca + cb)));
    std::copy_n(vb.begin() + static_cast<std::ptrdiff_t>(p * cb), cb,
                dst.begin() + static_cast<std::ptrdiff_t>(p * (ca + cb) + ca));
  }
  return out;
}

void accumulate(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("accumulate: shape mismatch");
  }
  auto dst = a.values();
  const auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace hsicd
