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

// Generators shared by the tests and the fixture tool.

#ifndef ECGNODE_TESTS_SUPPORT_GENERATORS_H_
#define ECGNODE_TESTS_SUPPORT_GENERATORS_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ecgnode/qcnn.h"

namespace ecgnode::testing {

struct BeatShape {
  int cls;           // morphology cluster, 0..4
  double amplitude;  // signed; negative for inverted beats
  double sigma;      // samples
};

// Morphology clusters: {sign, amplitude range, width range}. The ranges
// leave gaps between clusters, as real beat classes do.
struct BeatCluster {
  double sign, amp_lo, amp_hi, sigma_lo, sigma_hi, weight;
};
inline constexpr BeatCluster kBeatClusters[kNumClasses] = {
    {+1, 900, 1500, 2.5, 4.5, 0.40},  // narrow, tall
    {+1, 700, 1300, 7.0, 9.0, 0.15},  // wide
    {+1, 300, 600, 2.5, 4.5, 0.15},   // narrow, small
    {-1, 600, 1400, 2.5, 4.0, 0.15},  // inverted, narrow
    {-1, 600, 1400, 7.0, 9.0, 0.15},  // inverted, wide
};

// ECG-like frame: one Gaussian beat from a random morphology cluster near
// the center, a slow baseline drift and white noise.
inline std::vector<int16_t> random_beat_frame(std::mt19937_64 &rng, int length = kFrameLength,
                                              BeatShape *shape = nullptr) {
  std::discrete_distribution<int> pick({kBeatClusters[0].weight, kBeatClusters[1].weight,
                                        kBeatClusters[2].weight, kBeatClusters[3].weight,
                                        kBeatClusters[4].weight});
  const int cls = pick(rng);
  const BeatCluster &bc = kBeatClusters[cls];
  std::uniform_real_distribution<double> amp(bc.amp_lo, bc.amp_hi), sigma(bc.sigma_lo, bc.sigma_hi),
      offset(-25.0, 25.0), drift(-200.0, 200.0), noise_sd(0.0, 40.0), phase(0.0, 6.283);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double a = bc.sign * amp(rng);
  const double s = sigma(rng), c = length / 2.0 + offset(rng), d = drift(rng), sd = noise_sd(rng),
               ph = phase(rng);
  if (shape != nullptr) *shape = {cls, a, s};
  std::vector<int16_t> frame(static_cast<size_t>(length));
  for (int i = 0; i < length; ++i) {
    const double z = (i - c) / s;
    double v = a * std::exp(-0.5 * z * z) + d * std::sin(ph + i * 0.02) + sd * noise(rng);
    frame[static_cast<size_t>(i)] = static_cast<int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
  }
  return frame;
}

inline std::vector<int8_t> random_int8(std::mt19937_64 &rng, size_t n, int lo = -127, int hi = 127) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<int8_t> v(n);
  for (auto &x : v) x = static_cast<int8_t>(d(rng));
  return v;
}

inline LayerSpec conv_layer(int in, int out, int kernel, int stride, std::vector<int8_t> w,
                            double w_scale, QuantParams out_qp) {
  LayerSpec l;
  l.kind = LayerKind::kConv1d;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.stride = stride;
  l.weights = std::move(w);
  l.weight_scale = w_scale;
  l.output_qparams = out_qp;
  return l;
}

inline LayerSpec fc_layer(int in, int out, std::vector<int8_t> w, double w_scale, QuantParams out_qp) {
  LayerSpec l;
  l.kind = LayerKind::kFullyConnected;
  l.in_channels = in;
  l.out_channels = out;
  l.weights = std::move(w);
  l.weight_scale = w_scale;
  l.output_qparams = out_qp;
  return l;
}

inline LayerSpec relu_layer() {
  LayerSpec l;
  l.kind = LayerKind::kRelu;
  return l;
}

inline LayerSpec pool_layer(int kernel, int stride) {
  LayerSpec l;
  l.kind = LayerKind::kMaxPool1d;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

// Smooth int8 kernels: random mixtures of the first three cosine modes,
// scaled to use most of the int8 range. Trained ECG front ends look like
// this; white-noise kernels would amplify input rounding unrealistically.
inline std::vector<int8_t> smooth_kernels(std::mt19937_64 &rng, int count, int kernel) {
  std::normal_distribution<double> coef(0.0, 1.0);
  std::vector<int8_t> w;
  for (int n = 0; n < count; ++n) {
    const double c[3] = {coef(rng), coef(rng), coef(rng)};
    std::vector<double> k(static_cast<size_t>(kernel));
    double peak = 1e-9;
    for (int i = 0; i < kernel; ++i) {
      double v = 0.0;
      for (int j = 0; j < 3; ++j) v += c[j] * std::cos(M_PI * j * (i + 0.5) / kernel);
      k[static_cast<size_t>(i)] = v;
      peak = std::max(peak, std::abs(v));
    }
    for (double v : k) w.push_back(static_cast<int8_t>(std::lround(v / peak * 120.0)));
  }
  return w;
}

// Reference-topology model with a smooth first layer, random int8 weights
// elsewhere, and uncalibrated
// (unit-ish) scales; callers set scales before finalize().
inline QModel random_reference_model(std::mt19937_64 &rng, LabelSetId labels, int c1, int c2,
                                     int fc1, int kernel = 7, int input_len = kFrameLength) {
  QModel m;
  m.label_set = labels;
  m.name = std::string(labels == LabelSetId::kNLRAV ? "NLRAV_" : "NSVFQ_") + std::to_string(c1) +
           "_" + std::to_string(c2) + "_" + std::to_string(fc1);
  m.input_len = input_len;
  m.input_qparams = {1.0, 0};
  const int l1 = (input_len - kernel + 1) / 2;
  const int l2 = (l1 - kernel + 1) / 2;
  m.layers.push_back(conv_layer(1, c1, kernel, 1, smooth_kernels(rng, c1, kernel), 1.0, {1.0, 0}));
  m.layers.push_back(relu_layer());
  m.layers.push_back(pool_layer(2, 2));
  m.layers.push_back(conv_layer(c1, c2, kernel, 1, smooth_kernels(rng, c2 * c1, kernel), 1.0, {1.0, 0}));
  m.layers.push_back(relu_layer());
  m.layers.push_back(pool_layer(2, 2));
  m.layers.push_back(fc_layer(c2 * l2, fc1, random_int8(rng, static_cast<size_t>(fc1 * c2 * l2)), 1.0, {1.0, 0}));
  m.layers.push_back(relu_layer());
  m.layers.push_back(fc_layer(fc1, kNumClasses, random_int8(rng, static_cast<size_t>(kNumClasses * fc1)), 1.0, {1.0, 0}));
  return m;
}

// Sets weight scales from the int8 range and activation scales/zero points
// from the min/max each weighted layer reaches in the float path over
// `frames` (MinMax observation). A layer followed by relu is calibrated on
// [0, max] as if the relu were fused. Finalizes the model.
inline void calibrate(QModel &m, const std::vector<std::vector<int16_t>> &frames) {
  double in_max = 1.0;
  for (const auto &f : frames) {
    for (int16_t v : f) in_max = std::max(in_max, std::abs(static_cast<double>(v)));
  }
  m.input_qparams = {in_max / 127.0, 0};

  for (auto &l : m.layers) {
    if (l.has_weights()) l.weight_scale = 1.0 / 64.0;
  }

  // Observe one weighted layer at a time by truncating the model.
  for (size_t i = 0; i < m.layers.size(); ++i) {
    if (!m.layers[i].has_weights()) continue;
    QModel prefix = m;
    prefix.layers.resize(i + 1);
    for (auto &l : prefix.layers) {
      if (l.has_weights()) l.output_qparams = {1.0, 0};
    }
    prefix.finalize();
    const bool fused_relu = i + 1 < m.layers.size() && m.layers[i + 1].kind == LayerKind::kRelu;
    double lo = 0.0, hi = 0.0;
    for (const auto &f : frames) {
      for (double v : infer_float(prefix, f)) {
        if (!fused_relu) lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double scale = std::max(hi - lo, 1e-6) / 255.0;
    const auto zp = static_cast<int32_t>(std::clamp(std::lround(-128.0 - lo / scale), -128L, 127L));
    m.layers[i].output_qparams = {scale, zp};
  }
  m.finalize();
}

// Refits the final fully connected layer by ridge regression of one-hot
// targets on the float features feeding it, then rounds the solution to
// int8. The model must be finalized; callers recalibrate afterwards.
inline void fit_readout(QModel &m, const std::vector<std::vector<int16_t>> &frames,
                        const std::vector<int> &classes, double ridge = 1e-3) {
  QModel prefix = m;
  prefix.layers.pop_back();
  LayerSpec &last = m.layers.back();
  const auto n = static_cast<size_t>(last.in_channels);
  const auto k = static_cast<size_t>(last.out_channels);

  // Normal equations A w = b, one right-hand side per class.
  std::vector<double> a(n * n, 0.0), b(n * k, 0.0);
  for (size_t f = 0; f < frames.size(); ++f) {
    const std::vector<double> x = infer_float(prefix, frames[f]);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) a[i * n + j] += x[i] * x[j];
      for (size_t c = 0; c < k; ++c) {
        b[i * k + c] += x[i] * (static_cast<size_t>(classes[f]) == c ? 1.0 : -1.0);
      }
    }
  }
  double trace = 0.0;
  for (size_t i = 0; i < n; ++i) trace += a[i * n + i];
  for (size_t i = 0; i < n; ++i) a[i * n + i] += ridge * trace / static_cast<double>(n) + 1e-12;

  // Gaussian elimination with partial pivoting.
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    for (size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
    for (size_t c = 0; c < k; ++c) std::swap(b[col * k + c], b[piv * k + c]);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      for (size_t c = 0; c < k; ++c) b[r * k + c] -= f * b[col * k + c];
    }
  }
  std::vector<double> w(n * k, 0.0);
  for (size_t i = n; i-- > 0;) {
    for (size_t c = 0; c < k; ++c) {
      double v = b[i * k + c];
      for (size_t j = i + 1; j < n; ++j) v -= a[i * n + j] * w[j * k + c];
      w[i * k + c] = v / a[i * n + i];
    }
  }
  double peak = 1e-300;
  for (double v : w) peak = std::max(peak, std::abs(v));
  for (size_t c = 0; c < k; ++c) {
    for (size_t i = 0; i < n; ++i) {
      last.weights[c * n + i] = static_cast<int8_t>(std::lround(w[i * k + c] / peak * 127.0));
    }
  }
}

}  // namespace ecgnode::testing

#endif  // ECGNODE_TESTS_SUPPORT_GENERATORS_H_
