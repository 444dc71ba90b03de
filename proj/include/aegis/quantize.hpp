#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aegis/dqn.hpp"

namespace aegis {

// INT4 deployment form of a QNetwork. Weights are 4-bit two's-complement
// values with one power-of-two scale per layer; biases are pre-converted
// into the integer accumulator scale of their layer, so the forward pass is
// integer-only end to end. With per-layer scales 2^e1 and 2^e2:
//
//   layer-1 accumulator unit: 2^e1          (inputs arrive as plain ints)
//   layer-2 accumulator unit: 2^(e1 + e2)
//
// Ranking the four outputs needs no rescaling at all, since they share one
// positive unit.
struct QuantizedNetwork {
  static constexpr int kInput = QNetwork::kInput;
  static constexpr int kHidden = QNetwork::kHidden;
  static constexpr int kOutput = QNetwork::kOutput;
  static constexpr int kWeightMin = -8;
  static constexpr int kWeightMax = 7;

  std::vector<std::int8_t> w1;  // [kInput][kHidden], each in [-8, 7]
  std::vector<std::int64_t> b1; // layer-1 accumulator scale
  std::vector<std::int8_t> w2;  // [kHidden][kOutput]
  std::vector<std::int64_t> b2; // layer-2 accumulator scale
  int w1_exp = 0;
  int w2_exp = 0;

  void check_shapes() const {
    if (w1.size() != static_cast<std::size_t>(kInput * kHidden) ||
        b1.size() != static_cast<std::size_t>(kHidden) ||
        w2.size() != static_cast<std::size_t>(kHidden * kOutput) ||
        b2.size() != static_cast<std::size_t>(kOutput))
      throw std::invalid_argument("QuantizedNetwork: array shapes do not match 11x256x4");
    for (std::int8_t v : w1)
      if (v < kWeightMin || v > kWeightMax)
        throw std::invalid_argument("QuantizedNetwork: layer-1 weight outside int4 range");
    for (std::int8_t v : w2)
      if (v < kWeightMin || v > kWeightMax)
        throw std::invalid_argument("QuantizedNetwork: layer-2 weight outside int4 range");
  }
};

using IntState = std::array<int, QuantizedNetwork::kInput>;

namespace detail {

// Smallest exponent e (not below `floor_exp`) with max|w| <= 7 * 2^e. ldexp
// comparisons are exact, so no log-rounding edge cases.
inline int choose_exponent(const std::vector<double>& w, int floor_exp) {
  double m = 0;
  for (double v : w) m = std::max(m, std::abs(v));
  int e = floor_exp;
  while (std::ldexp(7.0, e) < m) ++e;
  return e;
}

inline std::vector<std::int8_t> quantize_layer(const std::vector<double>& w, int e) {
  std::vector<std::int8_t> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    long long q = std::llround(std::ldexp(w[i], -e));
    if (q < QuantizedNetwork::kWeightMin) q = QuantizedNetwork::kWeightMin;
    if (q > QuantizedNetwork::kWeightMax) q = QuantizedNetwork::kWeightMax;
    out[i] = static_cast<std::int8_t>(q);
  }
  return out;
}

}  // namespace detail

// Normalized features are real values in [0, 128]; the integer pipeline
// takes them rounded to the nearest integer.
inline IntState to_int_state(const StateVector& s) {
  IntState out;
  for (int i = 0; i < QuantizedNetwork::kInput; ++i) {
    long long v = std::llround(s[i]);
    if (v < 0) v = 0;
    if (v > 128) v = 128;
    out[i] = static_cast<int>(v);
  }
  return out;
}

inline QuantizedNetwork quantize_int4(const QNetwork& net, int floor_exp = -20) {
  net.check_shapes();
  QuantizedNetwork q;
  q.w1_exp = detail::choose_exponent(net.w1, floor_exp);
  q.w2_exp = detail::choose_exponent(net.w2, floor_exp);
  q.w1 = detail::quantize_layer(net.w1, q.w1_exp);
  q.w2 = detail::quantize_layer(net.w2, q.w2_exp);
  q.b1.resize(net.b1.size());
  q.b2.resize(net.b2.size());
  for (std::size_t j = 0; j < net.b1.size(); ++j)
    q.b1[j] = std::llround(std::ldexp(net.b1[j], -q.w1_exp));
  for (std::size_t k = 0; k < net.b2.size(); ++k)
    q.b2[k] = std::llround(std::ldexp(net.b2[k], -(q.w1_exp + q.w2_exp)));

  // Accumulators must not be able to overflow for any admissible input
  // (ints in [0, 128]). Worst cases are checked once here with 128-bit math
  // rather than per multiply in the hot path.
  __int128 h_max = 0;
  for (std::size_t j = 0; j < q.b1.size(); ++j) {
    __int128 acc = q.b1[j] < 0 ? -static_cast<__int128>(q.b1[j]) : q.b1[j];
    acc += static_cast<__int128>(QuantizedNetwork::kInput) * 8 * 128;
    h_max = std::max(h_max, acc);
  }
  __int128 out_max = static_cast<__int128>(QuantizedNetwork::kHidden) * 8 * h_max;
  for (std::size_t k = 0; k < q.b2.size(); ++k) {
    const __int128 b = q.b2[k] < 0 ? -static_cast<__int128>(q.b2[k]) : q.b2[k];
    if (out_max + b > static_cast<__int128>(INT64_MAX) / 2)
      throw std::overflow_error("quantize_int4: accumulator overflow for these bias magnitudes");
  }
  if (h_max > static_cast<__int128>(INT64_MAX) / 2)
    throw std::overflow_error("quantize_int4: accumulator overflow in hidden layer");
  q.check_shapes();
  return q;
}

// Integer-only inference. Output values are in units of 2^(w1_exp + w2_exp).
inline std::array<std::int64_t, QuantizedNetwork::kOutput> quantized_forward(
    const QuantizedNetwork& net, const IntState& state) {
  net.check_shapes();
  for (int v : state)
    if (v < 0 || v > 128)
      throw std::invalid_argument("quantized_forward: input outside [0, 128]");
  std::array<std::int64_t, QuantizedNetwork::kHidden> h;
  for (int j = 0; j < QuantizedNetwork::kHidden; ++j) h[j] = net.b1[j];
  for (int i = 0; i < QuantizedNetwork::kInput; ++i) {
    const std::int64_t x = state[i];
    if (x != 0) {
      const std::int8_t* row = &net.w1[static_cast<std::size_t>(i) * QuantizedNetwork::kHidden];
      for (int j = 0; j < QuantizedNetwork::kHidden; ++j) h[j] += row[j] * x;
    }
  }
  for (auto& v : h)
    if (v < 0) v = 0;
  std::array<std::int64_t, QuantizedNetwork::kOutput> out;
  for (int k = 0; k < QuantizedNetwork::kOutput; ++k) out[k] = net.b2[k];
  for (int j = 0; j < QuantizedNetwork::kHidden; ++j) {
    const std::int64_t hj = h[j];
    if (hj != 0) {
      const std::int8_t* row = &net.w2[static_cast<std::size_t>(j) * QuantizedNetwork::kOutput];
      for (int k = 0; k < QuantizedNetwork::kOutput; ++k) out[k] += row[k] * hj;
    }
  }
  return out;
}

inline int quantized_argmax(const QuantizedNetwork& net, const IntState& state) {
  const auto q = quantized_forward(net, state);
  int best = 0;
  for (int k = 1; k < QuantizedNetwork::kOutput; ++k)
    if (q[k] > q[best]) best = k;
  return best + 1;
}

// Float view of the quantized net: every stored value is exactly
// representable, so this is the reference model the integer path must match.
inline QNetwork dequantize(const QuantizedNetwork& qn) {
  qn.check_shapes();
  QNetwork n = QNetwork::zeros();
  for (std::size_t i = 0; i < qn.w1.size(); ++i) n.w1[i] = std::ldexp(double(qn.w1[i]), qn.w1_exp);
  for (std::size_t j = 0; j < qn.b1.size(); ++j)
    n.b1[j] = std::ldexp(static_cast<double>(qn.b1[j]), qn.w1_exp);
  for (std::size_t i = 0; i < qn.w2.size(); ++i) n.w2[i] = std::ldexp(double(qn.w2[i]), qn.w2_exp);
  for (std::size_t k = 0; k < qn.b2.size(); ++k)
    n.b2[k] = std::ldexp(static_cast<double>(qn.b2[k]), qn.w1_exp + qn.w2_exp);
  return n;
}

// Nibble packing for weight files: two int4 values per byte, the earlier
// element in the low nibble, two's-complement within each nibble.
inline std::vector<std::uint8_t> pack_int4(const std::vector<std::int8_t>& values) {
  std::vector<std::uint8_t> out((values.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint8_t nib = static_cast<std::uint8_t>(values[i]) & 0xF;
    out[i / 2] |= static_cast<std::uint8_t>(i % 2 == 0 ? nib : nib << 4);
  }
  return out;
}

inline std::vector<std::int8_t> unpack_int4(const std::vector<std::uint8_t>& bytes,
                                            std::size_t count) {
  if (bytes.size() != (count + 1) / 2)
    throw std::invalid_argument("unpack_int4: byte count does not match element count");
  std::vector<std::int8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    int nib = (i % 2 == 0 ? bytes[i / 2] : bytes[i / 2] >> 4) & 0xF;
    if (nib >= 8) nib -= 16;
    out[i] = static_cast<std::int8_t>(nib);
  }
  return out;
}

}  // namespace aegis
