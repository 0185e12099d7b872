#include "hsicd/hsi_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "hsicd/file_util.hpp"
#include "json.hpp"

namespace hsicd {

namespace fs = std::filesystem;
using nlohmann::json;

HyperCube::HyperCube(std::size_t height, std::size_t width, std::size_t bands)
    : HyperCube(height, width, bands, std::vector<float>(height * width * bands, 0.0F)) {}

HyperCube::HyperCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (height == 0 || width == 0 || bands == 0) {
    throw std::invalid_argument("HyperCube dimensions must be positive");
  }
  if (data_.size() != height * width * bands) {
    throw std::invalid_argument("HyperCube data length does not match dimensions");
  }
}

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFU) << 24) | ((v & 0xFF00U) << 8) | ((v >> 8) & 0xFF00U) | (v >> 24);
  }
}

std::size_t read_dim(const json& header, const char* key) {
  if (!header.contains(key) || !header[key].is_number_integer()) {
    throw std::runtime_error(std::string("header field missing or not an integer: ") + key);
  }
  const auto v = header[key].get<std::int64_t>();
  if (v <= 0) {
    throw std::runtime_error(std::string("header dimension must be positive: ") + key);
  }
  return static_cast<std::size_t>(v);
}

template <class Map>
Map read_pgm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw std::runtime_error("malformed PGM header: " + path.string());
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw std::runtime_error("not a binary PGM (P5): " + path.string());
  }
  pos = 2;
  const std::size_t width = read_int();
  const std::size_t height = read_int();
  const std::size_t maxval = read_int();
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw std::runtime_error("malformed PGM header: " + path.string());
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw std::runtime_error("malformed PGM header: " + path.string());
  }
  ++pos;

  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t need = width * height * sample_bytes;
  if (bytes.size() - pos < need) {
    throw std::runtime_error("truncated PGM payload: " + path.string());
  }
  Map map(height, width);
  for (std::size_t i = 0; i < width * height; ++i) {
    unsigned value = static_cast<unsigned char>(bytes[pos + i * sample_bytes]);
    if (sample_bytes == 2) {
      value = (value << 8) | static_cast<unsigned char>(bytes[pos + i * 2 + 1]);
    }
    map.labels[i] = value != 0 ? 1 : 0;
  }
  return map;
}

template <class Map>
void write_pgm(const Map& map, const fs::path& path) {
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  out.reserve(out.size() + map.labels.size());
  for (auto v : map.labels) out.push_back(v != 0 ? static_cast<char>(0xFF) : '\0');
  write_file_atomic(path, out);
}

double smooth_spectrum(double t, double freq, double phase, double amplitude) {
  return 0.5 + amplitude * std::sin(2.0 * std::numbers::pi * (freq * t + phase));
}

}  // namespace

HyperCube load_cube(const fs::path& header_path) {
  json header;
  try {
    header = json::parse(read_file(header_path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed cube header " + header_path.string() + ": " + e.what());
  }
  const std::size_t width = read_dim(header, "width");
  const std::size_t height = read_dim(header, "height");
  const std::size_t bands = read_dim(header, "bands");
  if (header.value("dtype", "") != "f32") {
    throw std::runtime_error("unsupported dtype in " + header_path.string());
  }
  if (header.value("interleave", "") != "bsq") {
    throw std::runtime_error("unsupported interleave in " + header_path.string());
  }
  if (!header.contains("data") || !header["data"].is_string()) {
    throw std::runtime_error("header has no data path: " + header_path.string());
  }
  const fs::path payload_path = header_path.parent_path() / header["data"].get<std::string>();
  const std::string payload = read_file(payload_path);

  const std::size_t count = width * height * bands;
  if (payload.size() != count * sizeof(float)) {
    throw std::runtime_error("payload size mismatch: " + payload_path.string() + " holds " +
                             std::to_string(payload.size()) + " bytes, header implies " +
                             std::to_string(count * sizeof(float)));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t raw = 0;
    std::memcpy(&raw, payload.data() + i * 4, 4);
    data[i] = std::bit_cast<float>(to_little_endian(raw));
  }
  return HyperCube(height, width, bands, std::move(data));
}

void save_cube(const HyperCube& cube, const fs::path& header_path) {
  fs::path payload_path = header_path;
  payload_path.replace_extension(".raw");

  std::string payload(cube.data().size() * 4, '\0');
  for (std::size_t i = 0; i < cube.data().size(); ++i) {
    const std::uint32_t raw = to_little_endian(std::bit_cast<std::uint32_t>(cube.data()[i]));
    std::memcpy(payload.data() + i * 4, &raw, 4);
  }
  write_file_atomic(payload_path, payload);

  const json header = {
      {"width", cube.width()},   {"height", cube.height()},
      {"bands", cube.bands()},   {"dtype", "f32"},
      {"interleave", "bsq"},     {"data", payload_path.filename().string()},
  };
  write_file_atomic(header_path, header.dump(2) + "\n");
}

HyperCube normalize_bands(const HyperCube& cube) {
  HyperCube out = cube;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto src = cube.band(b);
    const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
    const double min = *lo;
    const double range = static_cast<double>(*hi) - min;
    auto dst = out.band(b);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = range > 0.0 ? static_cast<float>((static_cast<double>(src[i]) - min) / range) : 0.0F;
    }
  }
  return out;
}

BandSelection drop_zero_entropy_bands(const HyperCube& cube) {
  std::vector<std::size_t> kept;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto values = cube.band(b);
    const bool constant = std::all_of(values.begin(), values.end(),
                                      [first = values.front()](float v) { return v == first; });
    if (!constant) kept.push_back(b);
  }
  if (kept.empty()) {
    throw std::runtime_error("no informative bands");
  }
  std::vector<float> data;
  data.reserve(kept.size() * cube.pixel_count());
  for (auto b : kept) {
    const auto values = cube.band(b);
    data.insert(data.end(), values.begin(), values.end());
  }
  return {HyperCube(cube.height(), cube.width(), kept.size(), std::move(data)), std::move(kept)};
}

GroundTruth load_ground_truth(const fs::path& path, std::pair<std::size_t, std::size_t> expected) {
  auto gt = read_pgm<GroundTruth>(path);
  if (expected.first != 0 && (gt.height != expected.first || gt.width != expected.second)) {
    throw std::runtime_error("ground truth dimension mismatch: " + path.string() + " is " +
                             std::to_string(gt.height) + "x" + std::to_string(gt.width) +
                             ", expected " + std::to_string(expected.first) + "x" +
                             std::to_string(expected.second));
  }
  return gt;
}

ChangeMap load_change_map(const fs::path& path) { return read_pgm<ChangeMap>(path); }

void save_pgm(const GroundTruth& map, const fs::path& path) { write_pgm(map, path); }
void save_pgm(const ChangeMap& map, const fs::path& path) { write_pgm(map, path); }

void SceneSpec::validate() const {
  if (height == 0 || width == 0 || bands == 0) {
    throw std::invalid_argument("scene dimensions must be positive");
  }
  if (!(change_fraction > 0.0 && change_fraction < 1.0)) {
    throw std::invalid_argument("change_fraction must lie strictly between 0 and 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("noise_sigma must be a non-negative finite value");
  }
}

// Scene model: a few smooth endmember spectra mixed by smooth spatial
// abundance fields. Image 2 copies image 1, adds independent noise, and
// overwrites one axis-aligned rectangle with a spectrum unlike any endmember.
SyntheticPair synthesize_pair(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  const std::size_t b = spec.bands;
  auto band_t = [b](std::size_t k) { return b > 1 ? static_cast<double>(k) / static_cast<double>(b - 1) : 0.0; };

  constexpr std::size_t kEndmembers = 4;
  constexpr std::size_t kBlobsPerEndmember = 3;
  std::vector<std::vector<double>> endmembers(kEndmembers, std::vector<double>(b));
  for (auto& e : endmembers) {
    const double freq = 0.5 + 1.5 * unit(rng);
    const double phase = unit(rng);
    for (std::size_t k = 0; k < b; ++k) e[k] = smooth_spectrum(band_t(k), freq, phase, 0.4);
  }

  struct Blob {
    double row, col, radius;
  };
  std::vector<std::vector<Blob>> blobs(kEndmembers);
  for (auto& list : blobs) {
    for (std::size_t i = 0; i < kBlobsPerEndmember; ++i) {
      const double radius = (0.15 + 0.25 * unit(rng)) * static_cast<double>(std::max(h, w));
      list.push_back({unit(rng) * static_cast<double>(h), unit(rng) * static_cast<double>(w), radius});
    }
  }

  std::vector<double> clean(h * w * b, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::array<double, kEndmembers> weight{};
      double total = 0.0;
      for (std::size_t e = 0; e < kEndmembers; ++e) {
        double s = 1e-3;
        for (const auto& blob : blobs[e]) {
          const double dr = static_cast<double>(r) - blob.row;
          const double dc = static_cast<double>(c) - blob.col;
          s += std::exp(-(dr * dr + dc * dc) / (2.0 * blob.radius * blob.radius));
        }
        // Sharpen so each endmember dominates somewhere.
        weight[e] = s * s * s * s;
        total += weight[e];
      }
      for (std::size_t k = 0; k < b; ++k) {
        double v = 0.0;
        for (std::size_t e = 0; e < kEndmembers; ++e) v += weight[e] / total * endmembers[e][k];
        clean[k * h * w + r * w + c] = v;
      }
    }
  }

  // Planted rectangle, sized to the target fraction with the scene's aspect ratio.
  const double target = spec.change_fraction * static_cast<double>(h * w);
  const auto rect_h = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(std::sqrt(target * static_cast<double>(h) / static_cast<double>(w)))), 1, h);
  const auto rect_w = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(target / static_cast<double>(rect_h))), 1, w);
  const auto row0 = static_cast<std::size_t>(unit(rng) * static_cast<double>(h - rect_h + 1)) % (h - rect_h + 1);
  const auto col0 = static_cast<std::size_t>(unit(rng) * static_cast<double>(w - rect_w + 1)) % (w - rect_w + 1);

  // Replacement spectrum: the reflection of the region's mean spectrum about
  // mid-scale, pulled toward 0.5 so it stays inside the scene's band ranges.
  std::vector<double> signature(b);
  {
    const double freq = 2.5 + unit(rng);
    const double phase = unit(rng);
    for (std::size_t k = 0; k < b; ++k) {
      double mean = 0.0;
      for (std::size_t r = row0; r < row0 + rect_h; ++r)
        for (std::size_t c = col0; c < col0 + rect_w; ++c) mean += clean[k * h * w + r * w + c];
      mean /= static_cast<double>(rect_h * rect_w);
      signature[k] = 0.5 * (1.0 - mean) + 0.5 * smooth_spectrum(band_t(k), freq, phase, 0.25);
    }
  }

  GroundTruth truth(h, w);
  std::vector<float> d1(h * w * b);
  std::vector<float> d2(h * w * b);
  for (std::size_t k = 0; k < b; ++k) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = k * h * w + r * w + c;
        const bool inside = r >= row0 && r < row0 + rect_h && c >= col0 && c < col0 + rect_w;
        const double v1 = clean[i] + spec.noise_sigma * gauss(rng);
        const double base2 = inside ? signature[k] : v1;
        const double v2 = base2 + spec.noise_sigma * gauss(rng);
        d1[i] = static_cast<float>(v1);
        d2[i] = static_cast<float>(v2);
        if (k == 0) truth.at(r, c) = inside ? 1 : 0;
      }
    }
  }
  return {HyperCube(h, w, b, std::move(d1)), HyperCube(h, w, b, std::move(d2)), std::move(truth)};
}

}  // namespace hsicd
