#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hsicd {

// Dense (height, width, channels) array, channel index fastest.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  Tensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }

  double& at(std::size_t row, std::size_t col, std::size_t ch) {
    return values_[(row * width_ + col) * channels_ + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_[(row * width_ + col) * channels_ + ch];
  }

  std::span<double> pixel(std::size_t row, std::size_t col) {
    return {values_.data() + (row * width_ + col) * channels_, channels_};
  }
  std::span<const double> pixel(std::size_t row, std::size_t col) const {
    return {values_.data() + (row * width_ + col) * channels_, channels_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Tensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_spatial(const Tensor& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  // Channels [begin, end) as a new tensor.
  Tensor slice_channels(std::size_t begin, std::size_t end) const;
  // Single channel `k` as an (H, W, 1) tensor.
  Tensor channel(std::size_t k) const { return slice_channels(k, k + 1); }

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

Tensor concat_channels(const Tensor& a, const Tensor& b);

// a += b, shapes must match.
void accumulate(Tensor& a, const Tensor& b);

}  // namespace hsicd
