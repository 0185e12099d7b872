#include <bit>
#include <cstring>
#include <stdexcept>

#include "hsicd/ffcae.hpp"
#include "hsicd/file_util.hpp"
#include "json.hpp"

namespace hsicd {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "FFCAE1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFU) << 24) | ((v & 0xFF00U) << 8) | ((v >> 8) & 0xFF00U) | (v >> 24);
  }
}

void append_f32(std::string& out, double value) {
  const auto raw = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(value)));
  char bytes[4];
  std::memcpy(bytes, &raw, 4);
  out.append(bytes, 4);
}

json topology_json(const FfcaeModel& model) {
  const auto& c = model.config();
  json layers = json::array();
  for (std::size_t k = 0; k < kFfcaeLayerCount; ++k) {
    const auto id = static_cast<FfcaeLayer>(k);
    const auto& s = model.layers()[k].shape();
    layers.push_back({{"name", layer_name(id)},
                      {"kernel_size", s.kernel_size},
                      {"in_channels", s.in_channels},
                      {"out_channels", s.out_channels},
                      {"activation", std::string(to_string(s.activation))},
                      {"seed", FfcaeModel::layer_seed(c.seed, id)}});
  }
  return {{"format", kMagic},
          {"bands", model.bands()},
          {"config",
           {{"n1", c.n1}, {"n2", c.n2}, {"n3", c.n3}, {"f1", c.f1}, {"f2", c.f2}, {"f3", c.f3},
            {"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"seed", c.seed}}},
          {"layers", layers}};
}

}  // namespace

std::string serialize_checkpoint(const FfcaeModel& model) {
  std::string out(kMagic);
  out += '\n';
  out += topology_json(model).dump();
  out += '\n';
  for (const auto& layer : model.layers()) {
    for (double w : layer.weights()) append_f32(out, w);
    for (double b : layer.biases()) append_f32(out, b);
  }
  return out;
}

FfcaeModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagic.size() + 1 || bytes.compare(0, kMagic.size(), kMagic) != 0 ||
      bytes[kMagic.size()] != '\n') {
    throw std::runtime_error("not an FFCAE1 checkpoint");
  }
  const std::size_t json_begin = kMagic.size() + 1;
  const std::size_t json_end = bytes.find('\n', json_begin);
  if (json_end == std::string::npos) {
    throw std::runtime_error("checkpoint topology block is not terminated");
  }
  json topo;
  FfcaeConfig config;
  std::size_t bands = 0;
  try {
    topo = json::parse(bytes.substr(json_begin, json_end - json_begin));
    const auto& c = topo.at("config");
    config.n1 = c.at("n1").get<std::size_t>();
    config.n2 = c.at("n2").get<std::size_t>();
    config.n3 = c.at("n3").get<std::size_t>();
    config.f1 = c.at("f1").get<std::size_t>();
    config.f2 = c.at("f2").get<std::size_t>();
    config.f3 = c.at("f3").get<std::size_t>();
    config.epochs = c.at("epochs").get<std::size_t>();
    config.learning_rate = c.at("learning_rate").get<double>();
    config.seed = c.at("seed").get<std::uint64_t>();
    bands = topo.at("bands").get<std::size_t>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint topology: ") + e.what());
  }
  config.validate();

  const auto shapes = FfcaeModel::topology(config, bands);
  const auto& listed = topo.at("layers");
  if (!listed.is_array() || listed.size() != kFfcaeLayerCount) {
    throw std::runtime_error("checkpoint layer list does not match the FFCAE topology");
  }
  std::size_t expected_floats = 0;
  for (std::size_t k = 0; k < kFfcaeLayerCount; ++k) {
    const auto& entry = listed[k];
    const ConvShape declared{entry.at("kernel_size").get<std::size_t>(),
                             entry.at("in_channels").get<std::size_t>(),
                             entry.at("out_channels").get<std::size_t>(),
                             activation_from_string(entry.at("activation").get<std::string>())};
    if (!(declared == shapes[k])) {
      throw std::runtime_error(std::string("checkpoint layer ") + layer_name(static_cast<FfcaeLayer>(k)) +
                               " has an unexpected shape");
    }
    expected_floats += shapes[k].weight_count() + shapes[k].out_channels;
  }

  const std::size_t payload_begin = json_end + 1;
  if (bytes.size() - payload_begin != expected_floats * 4) {
    throw std::runtime_error("checkpoint payload size mismatch");
  }
  std::size_t cursor = payload_begin;
  auto next = [&]() -> double {
    std::uint32_t raw = 0;
    std::memcpy(&raw, bytes.data() + cursor, 4);
    cursor += 4;
    return std::bit_cast<float>(to_little_endian(raw));
  };
  auto read_layer = [&](std::size_t k) {
    std::vector<double> w(shapes[k].weight_count());
    std::vector<double> b(shapes[k].out_channels);
    for (auto& v : w) v = next();
    for (auto& v : b) v = next();
    return ConvLayer(shapes[k], std::move(w), std::move(b));
  };
  FfcaeModel::Layers layers{read_layer(0), read_layer(1), read_layer(2),
                            read_layer(3), read_layer(4), read_layer(5)};
  return FfcaeModel(config, bands, std::move(layers));
}

void save_checkpoint(const FfcaeModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

FfcaeModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace hsicd
