#pragma once

// Weights file layout (all integers little-endian):
//   "DVPW" | u32 version | u32 config_bytes | config text (key = value) |
//   per layer in plan order: weights as f32, then bias as f32.
// Array lengths are not stored; they follow from the config.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/network.hpp"

namespace priorvqa {

inline constexpr char kWeightsMagic[4] = {'D', 'V', 'P', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

inline std::string join_counts(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline KeyValues network_config_keys(const NetworkConfig& cfg) {
  KeyValues kv;
  kv.set("in_channels", std::to_string(cfg.in_channels));
  kv.set("out_channels", std::to_string(cfg.out_channels));
  kv.set("encoder_channels", join_counts(cfg.encoder_channels));
  kv.set("kernel_size", std::to_string(cfg.kernel_size));
  kv.set("activation_slope", format_double(cfg.activation_slope));
  kv.set("seed", std::to_string(cfg.seed));
  return kv;
}

inline void read_network_config(const KeyValues& kv, NetworkConfig& cfg) {
  kv.read("in_channels", cfg.in_channels);
  kv.read("out_channels", cfg.out_channels);
  kv.read("encoder_channels", cfg.encoder_channels);
  kv.read("kernel_size", cfg.kernel_size);
  kv.read("activation_slope", cfg.activation_slope);
  kv.read("seed", cfg.seed);
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos,
                             const std::string& path) {
  if (pos + 4 > in.size()) {
    throw FormatError(path + ": truncated at byte " + std::to_string(pos));
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

}  // namespace detail

template <typename T>
std::string encode_weights(const NetworkWeights<T>& net) {
  KeyValues kv = network_config_keys(net.config);
  kv.set("role", to_string(net.role));
  const std::string cfg = kv.serialize();

  std::string out(kWeightsMagic, 4);
  detail::put_u32(out, kWeightsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  auto put_f32 = [&](T v) {
    detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  };
  for (const auto& layer : net.layers) {
    for (T v : layer.weights.values()) put_f32(v);
    for (T v : layer.bias) put_f32(v);
  }
  return out;
}

inline NetworkWeights<float> decode_weights(const std::string& bytes,
                                            const std::string& path = "<memory>") {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) {
    throw FormatError(path + ": not a weights file (missing DVPW magic)");
  }
  std::size_t pos = 4;
  const std::uint32_t version = detail::get_u32(bytes, pos, path);
  if (version != kWeightsVersion) {
    throw FormatError(path + ": unsupported weights version " +
                      std::to_string(version));
  }
  const std::uint32_t cfg_len = detail::get_u32(bytes, pos, path);
  if (pos + cfg_len > bytes.size()) {
    throw FormatError(path + ": config block overruns file");
  }
  NetworkWeights<float> net;
  try {
    const KeyValues kv =
        KeyValues::parse(std::string_view(bytes).substr(pos, cfg_len), path);
    read_network_config(kv, net.config);
    std::string role = "restorer";
    kv.read("role", role);
    if (role == "restorer") {
      net.role = NetworkRole::restorer;
    } else if (role == "feature_extractor") {
      net.role = NetworkRole::feature_extractor;
    } else {
      throw FormatError(path + ": unknown role '" + role + "'");
    }
    kv.reject_unknown(path);
    net.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(path + ": bad config block (" + e.what() + ")");
  }
  pos += cfg_len;

  const auto plan = layer_plan(net.config, net.role);
  std::size_t expected = pos;
  for (const auto& s : plan) {
    expected += 4 * (s.out_channels * s.in_channels * s.kernel * s.kernel +
                     s.out_channels);
  }
  if (expected != bytes.size()) {
    throw FormatError(path + ": expected " + std::to_string(expected) +
                      " bytes for this configuration, file has " +
                      std::to_string(bytes.size()));
  }
  auto get_f32 = [&] {
    return std::bit_cast<float>(detail::get_u32(bytes, pos, path));
  };
  for (const auto& s : plan) {
    ConvParams<float> layer{
        Tensor4<float>(Shape{s.out_channels, s.in_channels, s.kernel, s.kernel}),
        std::vector<float>(s.out_channels), s.stride, s.padding};
    for (float& v : layer.weights.values()) v = get_f32();
    for (float& v : layer.bias) v = get_f32();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <typename T>
void write_weights(const std::string& path, const NetworkWeights<T>& net) {
  const std::string bytes = encode_weights(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

inline NetworkWeights<float> read_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_weights(bytes, path);
}

}  // namespace priorvqa
