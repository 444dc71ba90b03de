#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aegis/quantize.hpp"

using namespace aegis;

TEST(ChooseExponent, PicksTheSmallestScaleThatCoversTheRange) {
  EXPECT_EQ(detail::choose_exponent({3.5}, -20), -1);   // 7 * 2^-1 == 3.5 exactly
  EXPECT_EQ(detail::choose_exponent({3.51}, -20), 0);   // 3.5 no longer covers it
  EXPECT_EQ(detail::choose_exponent({-7.0}, -20), 0);
  EXPECT_EQ(detail::choose_exponent({7.001}, -20), 1);
  EXPECT_EQ(detail::choose_exponent({896.0}, -20), 7);  // 7 * 128
  EXPECT_EQ(detail::choose_exponent({0.0, 0.0}, -20), -20);
  EXPECT_EQ(detail::choose_exponent({1e-9}, -20), -20);
}

TEST(QuantizeLayer, RoundsToNearestAndClampsTheEnds) {
  const std::vector<double> w = {0.6, -0.6, 0.9, -1.1, 5.0, -5.0, 0.0};
  const auto q = detail::quantize_layer(w, -3);  // unit 0.125
  EXPECT_EQ(q[0], 5);    // 4.8 rounds up
  EXPECT_EQ(q[1], -5);
  EXPECT_EQ(q[2], 7);    // 7.2 clamps to the int4 max
  EXPECT_EQ(q[3], -8);   // -8.8 clamps to the int4 min
  EXPECT_EQ(q[4], 7);
  EXPECT_EQ(q[5], -8);
  EXPECT_EQ(q[6], 0);
}

TEST(ToIntState, RoundsAndClampsInto0To128) {
  StateVector s{};
  s[0] = -3.0;
  s[1] = 0.49;
  s[2] = 0.5;
  s[3] = 127.6;
  s[4] = 300.0;
  const IntState is = to_int_state(s);
  EXPECT_EQ(is[0], 0);
  EXPECT_EQ(is[1], 0);
  EXPECT_EQ(is[2], 1);
  EXPECT_EQ(is[3], 128);
  EXPECT_EQ(is[4], 128);
  EXPECT_EQ(is[5], 0);
}

TEST(PackInt4, RoundTripsEveryNibbleValueLowHalfFirst) {
  std::vector<std::int8_t> values;
  for (int v = -8; v <= 7; ++v) values.push_back(static_cast<std::int8_t>(v));
  const auto bytes = pack_int4(values);
  ASSERT_EQ(bytes.size(), 8u);
  // first pair: -8 (0x8) in the low nibble, -7 (0x9) in the high nibble
  EXPECT_EQ(bytes[0], 0x98);
  EXPECT_EQ(unpack_int4(bytes, values.size()), values);

  // odd element count leaves the final high nibble zero
  const std::vector<std::int8_t> odd = {3, -2, 7};
  const auto ob = pack_int4(odd);
  ASSERT_EQ(ob.size(), 2u);
  EXPECT_EQ(ob[1], 0x07);
  EXPECT_EQ(unpack_int4(ob, 3), odd);
  EXPECT_THROW(unpack_int4(ob, 5), std::invalid_argument);
}

TEST(QuantizeInt4, IsDeterministicAndInRange) {
  const QNetwork net = QNetwork::random_init(31);
  const QuantizedNetwork a = quantize_int4(net);
  const QuantizedNetwork b = quantize_int4(net);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.b2, b.b2);
  EXPECT_EQ(a.w1_exp, b.w1_exp);
  EXPECT_EQ(a.w2_exp, b.w2_exp);
  EXPECT_NO_THROW(a.check_shapes());
}

TEST(QuantizeInt4, GuardsAgainstAccumulatorOverflow) {
  QNetwork net = QNetwork::zeros();
  for (auto& b : net.b1) b = 1e30;
  EXPECT_THROW(quantize_int4(net), std::overflow_error);
}

TEST(QuantizedForward, MatchesTheDequantizedFloatNetworkExactly) {
  // All dequantized values are dyadic and the accumulators stay far below
  // 2^53 in layer units, so the double-precision reference is exact and the
  // two pipelines must agree to the bit, not approximately.
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    const QNetwork net = QNetwork::random_init(100 + static_cast<std::uint64_t>(trial));
    const QuantizedNetwork qn = quantize_int4(net);
    const QNetwork ref = dequantize(qn);
    IntState is;
    StateVector s{};
    for (int i = 0; i < QNetwork::kInput; ++i) {
      is[i] = static_cast<int>(uniform_index(rng, 129));
      s[i] = is[i];
    }
    const auto qi = quantized_forward(qn, is);
    const QValues qf = forward(ref, s);
    const double unit = std::ldexp(1.0, qn.w1_exp + qn.w2_exp);
    for (int k = 0; k < QNetwork::kOutput; ++k)
      EXPECT_DOUBLE_EQ(static_cast<double>(qi[k]) * unit, qf[k]) << "output " << k;
    EXPECT_EQ(quantized_argmax(qn, is), argmax_action(qf));
  }
}

TEST(QuantizedForward, RejectsOutOfRangeInputs) {
  const QuantizedNetwork qn = quantize_int4(QNetwork::random_init(1));
  IntState is{};
  is[3] = 129;
  EXPECT_THROW(quantized_forward(qn, is), std::invalid_argument);
  is[3] = -1;
  EXPECT_THROW(quantized_forward(qn, is), std::invalid_argument);
}

TEST(QuantizedForward, ReproducesAHandComputedSinglePath) {
  QuantizedNetwork qn;
  qn.w1.assign(QNetwork::kInput * QNetwork::kHidden, 0);
  qn.b1.assign(QNetwork::kHidden, 0);
  qn.w2.assign(QNetwork::kHidden * QNetwork::kOutput, 0);
  qn.b2.assign(QNetwork::kOutput, 0);
  qn.w1_exp = -2;
  qn.w2_exp = -1;
  qn.w1[0 * QNetwork::kHidden + 0] = 3;   // 0.75 after scaling
  qn.b1[0] = -4;                          // -1.0 in units of 2^-2
  qn.w2[0 * QNetwork::kOutput + 2] = -5;  // -2.5 after scaling
  qn.b2[2] = 16;                          // 2.0 in units of 2^-3

  IntState is{};
  is[0] = 10;  // hidden: 3*10 - 4 = 26 units of 2^-2, i.e. 6.5
  const auto out = quantized_forward(qn, is);
  // output 2: -5 * 26 + 16 = -114 units of 2^-3, i.e. -14.25
  EXPECT_EQ(out[2], -114);
  EXPECT_EQ(out[0], 0);
  const QValues f = forward(dequantize(qn), {10, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(f[2], -14.25);
}

TEST(QuantizedArgmax, AgreesWithFloatArgmaxOnMostStates) {
  // Quantization error can flip near-ties, but on random Xavier nets the
  // ranking should survive the 4-bit squeeze in the overwhelming majority of
  // states.
  std::mt19937_64 rng(57);
  int agree = 0;
  const int total = 500;
  const QNetwork net = QNetwork::random_init(58);
  const QuantizedNetwork qn = quantize_int4(net);
  for (int t = 0; t < total; ++t) {
    IntState is;
    StateVector s{};
    for (int i = 0; i < QNetwork::kInput; ++i) {
      is[i] = static_cast<int>(uniform_index(rng, 129));
      s[i] = is[i];
    }
    if (quantized_argmax(qn, is) == argmax_action(forward(net, s))) ++agree;
  }
  EXPECT_GE(agree, total * 7 / 10);
}
