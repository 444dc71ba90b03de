#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aegis/dqn.hpp"
#include "aegis/features.hpp"
#include "aegis/quantize.hpp"

namespace aegis {

// Weight files are JSON with an identifying header, the layer shapes, the
// normalization the weights were trained against, and one or both parameter
// encodings:
//
//   "float": plain double arrays (w1, b1, w2, b2)
//   "int4":  w1/w2 as hex-encoded nibble-packed int4 (two values per byte,
//            earlier element in the low nibble, two's-complement), integer
//            biases already in accumulator scale, plus the two per-layer
//            power-of-two exponents
struct WeightsFile {
  std::optional<QNetwork> float_net;
  std::optional<QuantizedNetwork> quantized;
  std::optional<NormalizationSpec> norm;
};

namespace detail {

inline std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

inline std::vector<std::uint8_t> from_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw std::runtime_error("malformed weights: odd hex length");
  const auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::runtime_error("malformed weights: bad hex digit");
  };
  std::vector<std::uint8_t> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return out;
}

inline nlohmann::json norm_to_json(const NormalizationSpec& spec) {
  nlohmann::json j;
  nlohmann::json modes = nlohmann::json::array();
  nlohmann::json caps = nlohmann::json::array();
  for (int i = 0; i < kFeatureCount; ++i) {
    modes.push_back(spec.modes[i] == NormMode::uniform ? "uniform" : "log2");
    caps.push_back(spec.caps[i]);
  }
  j["modes"] = modes;
  j["caps"] = caps;
  j["features"] = kFeatureNames;
  return j;
}

inline NormalizationSpec norm_from_json(const nlohmann::json& j) {
  NormalizationSpec spec;
  const auto& modes = j.at("modes");
  const auto& caps = j.at("caps");
  if (modes.size() != kFeatureCount || caps.size() != kFeatureCount)
    throw std::runtime_error("malformed weights: normalization arrays need 11 entries");
  for (int i = 0; i < kFeatureCount; ++i) {
    const std::string m = modes[static_cast<std::size_t>(i)].get<std::string>();
    if (m == "uniform")
      spec.modes[i] = NormMode::uniform;
    else if (m == "log2")
      spec.modes[i] = NormMode::log2;
    else
      throw std::runtime_error("malformed weights: unknown normalization mode '" + m + "'");
    spec.caps[i] = caps[static_cast<std::size_t>(i)].get<double>();
  }
  spec.validate();
  return spec;
}

inline nlohmann::json weights_header() {
  nlohmann::json j;
  j["format"] = "aegis-weights";
  j["version"] = 1;
  j["layers"] = nlohmann::json::array(
      {{QNetwork::kInput, QNetwork::kHidden}, {QNetwork::kHidden, QNetwork::kOutput}});
  return j;
}

inline void check_header(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "aegis-weights")
    throw std::runtime_error("malformed weights: missing format header");
  if (j.value("version", 0) != 1)
    throw std::runtime_error("malformed weights: unsupported version");
}

}  // namespace detail

inline nlohmann::json weights_to_json(const WeightsFile& w) {
  nlohmann::json j = detail::weights_header();
  if (w.norm) j["normalization"] = detail::norm_to_json(*w.norm);
  if (w.float_net) {
    w.float_net->check_shapes();
    nlohmann::json f;
    f["w1"] = w.float_net->w1;
    f["b1"] = w.float_net->b1;
    f["w2"] = w.float_net->w2;
    f["b2"] = w.float_net->b2;
    j["float"] = std::move(f);
  }
  if (w.quantized) {
    w.quantized->check_shapes();
    nlohmann::json q;
    q["w1"] = detail::to_hex(pack_int4(w.quantized->w1));
    q["w2"] = detail::to_hex(pack_int4(w.quantized->w2));
    q["b1"] = w.quantized->b1;
    q["b2"] = w.quantized->b2;
    q["w1_exp"] = w.quantized->w1_exp;
    q["w2_exp"] = w.quantized->w2_exp;
    j["int4"] = std::move(q);
  }
  return j;
}

inline WeightsFile weights_from_json(const nlohmann::json& j) {
  detail::check_header(j);
  WeightsFile w;
  if (j.contains("normalization")) w.norm = detail::norm_from_json(j.at("normalization"));
  if (j.contains("float")) {
    const auto& f = j.at("float");
    QNetwork n;
    n.w1 = f.at("w1").get<std::vector<double>>();
    n.b1 = f.at("b1").get<std::vector<double>>();
    n.w2 = f.at("w2").get<std::vector<double>>();
    n.b2 = f.at("b2").get<std::vector<double>>();
    n.check_shapes();
    w.float_net = std::move(n);
  }
  if (j.contains("int4")) {
    const auto& q = j.at("int4");
    QuantizedNetwork n;
    n.w1 = unpack_int4(detail::from_hex(q.at("w1").get<std::string>()),
                       QNetwork::kInput * QNetwork::kHidden);
    n.w2 = unpack_int4(detail::from_hex(q.at("w2").get<std::string>()),
                       QNetwork::kHidden * QNetwork::kOutput);
    n.b1 = q.at("b1").get<std::vector<std::int64_t>>();
    n.b2 = q.at("b2").get<std::vector<std::int64_t>>();
    n.w1_exp = q.at("w1_exp").get<int>();
    n.w2_exp = q.at("w2_exp").get<int>();
    n.check_shapes();
    w.quantized = std::move(n);
  }
  if (!w.float_net && !w.quantized)
    throw std::runtime_error("malformed weights: neither float nor int4 parameters present");
  return w;
}

inline void save_weights(const std::string& path, const WeightsFile& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << weights_to_json(w).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline WeightsFile load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed weights: " + std::string(e.what()));
  }
  try {
    return weights_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed weights: " + std::string(e.what()));
  }
}

}  // namespace aegis
