#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace hsicd {

// Hyperspectral cube of reflectance values.
//
// Storage is band-sequential (BSQ), matching the on-disk container:
//   data[band * height * width + row * width + col]
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t height, std::size_t width, std::size_t bands);
  HyperCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixel_count() const { return height_ * width_; }

  float& at(std::size_t row, std::size_t col, std::size_t band) {
    return data_[band * height_ * width_ + row * width_ + col];
  }
  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return data_[band * height_ * width_ + row * width_ + col];
  }

  std::span<float> band(std::size_t b) { return {data_.data() + b * pixel_count(), pixel_count()}; }
  std::span<const float> band(std::size_t b) const {
    return {data_.data() + b * pixel_count(), pixel_count()};
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const HyperCube&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
};

// Per-pixel binary labels (0 unchanged, 1 changed). The tag keeps ground truth
// and detector output from being passed in each other's place.
template <class Tag>
struct BinaryMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  BinaryMap() = default;
  BinaryMap(std::size_t h, std::size_t w) : height(h), width(w), labels(h * w, 0) {}
  BinaryMap(std::size_t h, std::size_t w, std::vector<std::uint8_t> l)
      : height(h), width(w), labels(std::move(l)) {}

  std::uint8_t at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return labels[row * width + col]; }
  std::size_t changed_count() const {
    std::size_t n = 0;
    for (auto v : labels) n += v;
    return n;
  }

  bool operator==(const BinaryMap&) const = default;
};

using GroundTruth = BinaryMap<struct GroundTruthTag>;
using ChangeMap = BinaryMap<struct ChangeMapTag>;

struct SceneSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t bands = 32;
  double change_fraction = 0.15;
  double noise_sigma = 0.02;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticPair {
  HyperCube image1;
  HyperCube image2;
  GroundTruth truth;
};

struct BandSelection {
  HyperCube cube;
  std::vector<std::size_t> kept;
};

// `header_path` names the JSON header; the payload path inside it is resolved
// relative to the header's directory.
HyperCube load_cube(const std::filesystem::path& header_path);
void save_cube(const HyperCube& cube, const std::filesystem::path& header_path);

HyperCube normalize_bands(const HyperCube& cube);
BandSelection drop_zero_entropy_bands(const HyperCube& cube);

// P5 reader. Any nonzero sample becomes label 1. When `expected` is given the
// map must have exactly that (height, width).
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::pair<std::size_t, std::size_t> expected = {0, 0});
ChangeMap load_change_map(const std::filesystem::path& path);

// Writes 0 / 255 P5.
void save_pgm(const GroundTruth& map, const std::filesystem::path& path);
void save_pgm(const ChangeMap& map, const std::filesystem::path& path);

SyntheticPair synthesize_pair(const SceneSpec& spec);

}  // namespace hsicd
