// Copyright 2026 The EcgNode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ecgnode/error.h"
#include "ecgnode/qcnn.h"
#include "support/generators.h"
#include "support/oracles.h"

namespace ecgnode {
namespace {

using testing::fc_layer;
using testing::pool_layer;

const std::string kFixtures = ECGNODE_FIXTURE_DIR;

EcgTrace ramp_trace(int n) {
  EcgTrace t;
  for (int i = 0; i < n; ++i) t.samples.push_back(static_cast<int16_t>(i + 1));
  return t;
}

TEST(ExtractFrame, CentersAndPadsWithZeros) {
  const EcgTrace t = ramp_trace(500);
  const auto mid = extract_frame(t, 250);
  ASSERT_EQ(mid.size(), 198u);
  EXPECT_EQ(mid[99], 251);
  EXPECT_EQ(mid[0], 152);

  const auto head = extract_frame(t, 0);
  for (int i = 0; i < 99; ++i) EXPECT_EQ(head[static_cast<size_t>(i)], 0);
  EXPECT_EQ(head[99], 1);

  const auto tail = extract_frame(t, 499);
  EXPECT_EQ(tail[99], 500);
  for (size_t i = 100; i < 198; ++i) EXPECT_EQ(tail[i], 0);
}

TEST(QuantizeFrame, RoundsAndSaturates) {
  const QuantParams qp{2.0, 3};
  const std::vector<int16_t> x{0, 1, -1, 3, 249, 250, 1000, -262, -263, -1000};
  const QTensor t = quantize_frame(x, qp);
  const std::vector<int8_t> want{3, 4, 2, 5, 127, 127, 127, -128, -128, -128};
  EXPECT_EQ(t.data, want);
  EXPECT_THROW(quantize_frame(x, {0.0, 0}), DataError);
}

TEST(QuantizeFrame, ErrorWithinHalfStepInRange) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    const QuantParams qp{std::uniform_real_distribution<double>(0.1, 40)(rng),
                         std::uniform_int_distribution<int>(-20, 20)(rng)};
    std::vector<int16_t> x(50);
    for (auto &v : x) v = static_cast<int16_t>(std::uniform_int_distribution<int>(-100 * qp.scale, 100 * qp.scale)(rng));
    const QTensor t = quantize_frame(x, qp);
    for (size_t i = 0; i < x.size(); ++i) {
      ASSERT_LE(std::abs(qp.dequantize(t.data[i]) - x[i]), qp.scale / 2 + 1e-9);
    }
  }
}

// 1 channel, kernel-1 unit convolutions and stride-1 pools of width 1, so
// the network reduces to the final linear map, worked out by hand.
QModel degenerate_model() {
  QModel m;
  m.name = "NLRAV_id";
  m.input_len = 4;
  m.input_qparams = {1.0, 0};
  m.layers.push_back(testing::conv_layer(1, 1, 1, 1, {1}, 1.0, {1.0, 0}));
  m.layers.push_back(pool_layer(1, 1));
  m.layers.push_back(testing::conv_layer(1, 1, 1, 1, {1}, 1.0, {1.0, 0}));
  m.layers.push_back(pool_layer(1, 1));
  m.layers.push_back(fc_layer(4, 5,
                              {1, 0, 0, 0,  //
                               0, 1, 0, 0,  //
                               1, 1, 1, 1,  //
                               -1, 0, 0, 1,  //
                               2, 0, 0, 0},
                              1.0, {1.0, 0}));
  m.finalize();
  return m;
}

TEST(Inference, DegenerateModelIsHandCheckedLinearMap) {
  const QModel m = degenerate_model();
  const std::vector<int16_t> x{1, 2, 3, 4};
  EXPECT_EQ(infer_float(m, x), (std::vector<double>{1, 2, 10, 3, 2}));
  const QuantResult q = infer_quant(m, quantize_frame(x, m.input_qparams));
  EXPECT_EQ(q.outputs, (std::vector<int8_t>{1, 2, 10, 3, 2}));
  EXPECT_EQ(q.predicted, 2);
}

TEST(Inference, FloatMatchesIndependentOracle) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    QModel m = testing::random_reference_model(rng, LabelSetId::kNLRAV, 3, 4, 20);
    std::vector<std::vector<int16_t>> frames;
    for (int i = 0; i < 20; ++i) frames.push_back(testing::random_beat_frame(rng));
    testing::calibrate(m, frames);
    for (const auto &f : frames) {
      const auto got = infer_float(m, f);
      const auto want = testing::oracle_float(m, std::vector<double>(f.begin(), f.end()));
      ASSERT_EQ(got.size(), want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        ASSERT_NEAR(got[i], want[i], 1e-9 * std::max(1.0, std::abs(want[i])));
      }
    }
  }
}

TEST(Inference, ZeroFrameGivesZeroLogits) {
  std::mt19937_64 rng(59);
  QModel m = testing::random_reference_model(rng, LabelSetId::kNSVFQ, 4, 4, 10);
  m.input_qparams = {5.0, 0};
  for (auto &l : m.layers) {
    if (l.has_weights()) {
      l.weight_scale = 0.01;
      l.output_qparams = {3.0, 0};
    }
  }
  m.finalize();
  const std::vector<int16_t> zero(198, 0);
  for (double v : infer_float(m, zero)) EXPECT_EQ(v, 0.0);
  const QuantResult q = infer_quant(m, quantize_frame(zero, m.input_qparams));
  for (int8_t v : q.outputs) EXPECT_EQ(v, 0);
  EXPECT_EQ(q.predicted, 0);
}

TEST(Inference, QuantMatchesBruteForceIntegerOracle) {
  std::mt19937_64 rng(61);
  int interior = 0, total = 0;
  for (int seed = 0; seed < 200; ++seed) {
    const QModel m = testing::random_small_model(rng);
    for (int f = 0; f < 5; ++f) {
      QTensor in;
      in.length = m.input_len;
      in.qparams = m.input_qparams;
      in.data = testing::random_int8(rng, static_cast<size_t>(m.input_len), -128, 127);
      const QuantResult got = infer_quant(m, in);
      const std::vector<int> want = testing::oracle_quant(m, std::vector<int>(in.data.begin(), in.data.end()));
      ASSERT_EQ(std::vector<int>(got.outputs.begin(), got.outputs.end()), want) << "model " << seed;
      for (int v : want) {
        interior += v > -128 && v < 127;
        ++total;
      }
    }
  }
  // Guard against a vacuous comparison of saturated outputs.
  EXPECT_GT(interior, total / 2);
}

TEST(Inference, QuantIsDeterministic) {
  const QModel m = load_model(kFixtures + "/NLRAV_4_4_100.json");
  std::mt19937_64 rng(67);
  const QTensor in = quantize_frame(testing::random_beat_frame(rng), m.input_qparams);
  const QuantResult a = infer_quant(m, in), b = infer_quant(m, in);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.predicted, b.predicted);
}

TEST(Inference, ShapeMismatchIsDataError) {
  const QModel m = degenerate_model();
  const std::vector<int16_t> x{1, 2, 3};
  EXPECT_THROW(infer_float(m, x), DataError);
  EXPECT_THROW(infer_quant(m, quantize_frame(x, m.input_qparams)), DataError);
}

TEST(Argmax, TiesGoToLowestIndexAndShiftDoesNotMatter) {
  const std::vector<int8_t> tie{3, 7, 7, -1, 7};
  EXPECT_EQ(argmax(std::span<const int8_t>(tie)), 1);
  std::mt19937_64 rng(71);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(5);
    for (auto &x : v) x = std::uniform_int_distribution<int>(-3, 3)(rng);
    const double c = std::uniform_real_distribution<double>(-100, 100)(rng);
    std::vector<double> shifted = v;
    for (auto &x : shifted) x += c;
    ASSERT_EQ(argmax(std::span<const double>(v)), argmax(std::span<const double>(shifted)));
  }
}

TEST(Augment, DefaultOffsets) {
  const auto offsets = default_augment_offsets();
  ASSERT_EQ(offsets.size(), 33u);
  EXPECT_EQ(offsets.front(), -48);
  EXPECT_EQ(offsets.back(), 48);
  for (size_t i = 1; i < offsets.size(); ++i) EXPECT_EQ(offsets[i] - offsets[i - 1], 3);

  const EcgTrace t = ramp_trace(2000);
  const auto frames = augment(t, 1000, offsets);
  ASSERT_EQ(frames.size(), 33u);
  for (size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(frames[i], extract_frame(t, 1000 + offsets[i]));
  const std::vector<int> zero{0};
  EXPECT_EQ(augment(t, 700, zero).at(0), extract_frame(t, 700));
  EXPECT_THROW(augment(t, 700, std::span<const int>()), DataError);
}

TEST(WeightFile, FixturesLoadWithReferenceTopology) {
  const QModel small = load_model(kFixtures + "/NLRAV_4_4_100.json");
  EXPECT_TRUE(small.has_reference_topology());
  EXPECT_EQ(small.size_tag(), "4_4_100");
  EXPECT_EQ(small.labels().name, "NLRAV");
  const auto shapes = layer_shapes(small);
  EXPECT_EQ(shapes[0].length, 192);
  EXPECT_EQ(shapes[2].length, 96);
  EXPECT_EQ(shapes[3].length, 90);
  EXPECT_EQ(shapes[5].length, 45);
  EXPECT_EQ(small.output_size(), 5);

  const QModel big = load_model(kFixtures + "/NSVFQ_20_20_100.json");
  EXPECT_EQ(big.size_tag(), "20_20_100");
  EXPECT_EQ(big.labels().symbol(1), 'S');
}

TEST(WeightFile, RoundTrip) {
  const QModel m = load_model(kFixtures + "/NLRAV_4_4_100.json");
  const std::string text = format_model(m);
  EXPECT_EQ(format_model(parse_model(text)), text);
}

TEST(WeightFile, RejectsMalformedFiles) {
  const QModel m = degenerate_model();
  const nlohmann::json base = nlohmann::json::parse(format_model(m));
  auto parse = [](const nlohmann::json &j) { return parse_model(j.dump(), false); };
  EXPECT_NO_THROW(parse(base));
  EXPECT_THROW(parse_model(base.dump(), true), ParseError);  // not the reference topology

  auto j = base;
  j.erase("input_scale");
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["weights"] = "AQIDBA==";
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["weights"][0] = 1.5;
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["weights"][0] = 128;
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["weights"].erase(0);
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["bias"] = {0, 0, 0.5, 0, 0};
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["bias"] = {0, 0, 0, 0, 0};
  EXPECT_NO_THROW(parse(j));
  j = base;
  j["layers"][4]["requant_multiplier"] = 12345;
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["layers"][4]["kind"] = "softmax";
  EXPECT_THROW(parse(j), ParseError);
  j = base;
  j["label_set"] = "XYZ";
  EXPECT_THROW(parse(j), ParseError);
  EXPECT_THROW(parse_model("{not json"), ParseError);
}

}  // namespace
}  // namespace ecgnode
