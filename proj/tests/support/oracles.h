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

// Independent reference implementations of the CNN forward passes. They
// share no code with the library: activations are nested [channel][time]
// vectors, requantization constants are derived here from the scales, and
// rounding is done in exact 128-bit arithmetic.

#ifndef ECGNODE_TESTS_SUPPORT_ORACLES_H_
#define ECGNODE_TESTS_SUPPORT_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ecgnode/qcnn.h"
#include "support/generators.h"

namespace ecgnode::testing {

template <typename T>
using Planes = std::vector<std::vector<T>>;

template <typename T>
Planes<T> flatten(const Planes<T> &x) {
  std::vector<T> flat;
  for (const auto &ch : x) flat.insert(flat.end(), ch.begin(), ch.end());
  Planes<T> out;
  for (T v : flat) out.push_back({v});
  return out;
}

inline std::vector<double> oracle_float(const QModel &m, const std::vector<double> &frame) {
  Planes<double> x{frame};
  for (const LayerSpec &l : m.layers) {
    if (l.kind == LayerKind::kFullyConnected) {
      const Planes<double> f = flatten(x);
      Planes<double> y(static_cast<size_t>(l.out_channels), std::vector<double>(1, 0.0));
      for (int o = 0; o < l.out_channels; ++o) {
        double acc = 0.0;
        for (size_t j = 0; j < f.size(); ++j) acc += f[j][0] * l.weights[o * f.size() + j];
        y[static_cast<size_t>(o)][0] = acc * l.weight_scale;
      }
      x = y;
    } else if (l.kind == LayerKind::kConv1d) {
      const int len = static_cast<int>(x[0].size());
      const int out_len = (len - l.kernel) / l.stride + 1;
      Planes<double> y(static_cast<size_t>(l.out_channels), std::vector<double>(static_cast<size_t>(out_len)));
      for (int o = 0; o < l.out_channels; ++o) {
        for (int t = 0; t < out_len; ++t) {
          double acc = 0.0;
          for (size_t c = 0; c < x.size(); ++c) {
            for (int k = 0; k < l.kernel; ++k) {
              acc += x[c][static_cast<size_t>(t * l.stride + k)] *
                     l.weights[(static_cast<size_t>(o) * x.size() + c) * static_cast<size_t>(l.kernel) + static_cast<size_t>(k)];
            }
          }
          y[static_cast<size_t>(o)][static_cast<size_t>(t)] = acc * l.weight_scale;
        }
      }
      x = y;
    } else if (l.kind == LayerKind::kRelu) {
      for (auto &ch : x) {
        for (double &v : ch) v = v > 0.0 ? v : 0.0;
      }
    } else {
      Planes<double> y;
      for (const auto &ch : x) {
        std::vector<double> out;
        for (size_t t = 0; t + static_cast<size_t>(l.kernel) <= ch.size(); t += static_cast<size_t>(l.stride)) {
          out.push_back(*std::max_element(ch.begin() + static_cast<long>(t), ch.begin() + static_cast<long>(t) + l.kernel));
        }
        y.push_back(out);
      }
      x = y;
    }
  }
  std::vector<double> out;
  for (const auto &ch : x) out.insert(out.end(), ch.begin(), ch.end());
  return out;
}

// Multiplier in [2^30, 2^31) and shift with multiplier * 2^-shift ~= r,
// found by doubling rather than frexp.
struct OracleRequant {
  int64_t multiplier;
  int shift;
};

inline OracleRequant oracle_requant(double r) {
  int shift = 0;
  double v = r;
  while (v < 1073741824.0) {  // 2^30
    v *= 2.0;
    ++shift;
  }
  while (v >= 2147483648.0) {  // 2^31
    v /= 2.0;
    --shift;
  }
  int64_t m = std::llround(v);
  if (m == 2147483648LL) {
    m /= 2;
    --shift;
  }
  return {m, shift};
}

inline int64_t oracle_round_scaled(int64_t acc, const OracleRequant &rq) {
  const __int128 p = static_cast<__int128>(acc) * rq.multiplier;
  const __int128 mag = p < 0 ? -p : p;
  const __int128 one = static_cast<__int128>(1) << rq.shift;
  __int128 q = mag / one;
  if (2 * (mag % one) >= one) ++q;
  return static_cast<int64_t>(p < 0 ? -q : q);
}

inline std::vector<int> oracle_quant(const QModel &m, const std::vector<int> &input) {
  Planes<int> x{input};
  double scale = m.input_qparams.scale;
  int zp = m.input_qparams.zero_point;
  auto requant = [&](int64_t acc, const LayerSpec &l) {
    const OracleRequant rq = oracle_requant(scale * l.weight_scale / l.output_qparams.scale);
    const int64_t v = oracle_round_scaled(acc, rq) + l.output_qparams.zero_point;
    return static_cast<int>(std::min<int64_t>(127, std::max<int64_t>(-128, v)));
  };
  for (const LayerSpec &l : m.layers) {
    if (l.kind == LayerKind::kFullyConnected) {
      const Planes<int> f = flatten(x);
      Planes<int> y;
      for (int o = 0; o < l.out_channels; ++o) {
        int64_t acc = 0;
        for (size_t j = 0; j < f.size(); ++j) acc += int64_t{f[j][0] - zp} * l.weights[o * f.size() + j];
        y.push_back({requant(acc, l)});
      }
      x = y;
      scale = l.output_qparams.scale;
      zp = l.output_qparams.zero_point;
    } else if (l.kind == LayerKind::kConv1d) {
      const int len = static_cast<int>(x[0].size());
      const int out_len = (len - l.kernel) / l.stride + 1;
      Planes<int> y(static_cast<size_t>(l.out_channels), std::vector<int>(static_cast<size_t>(out_len)));
      for (int o = 0; o < l.out_channels; ++o) {
        for (int t = 0; t < out_len; ++t) {
          int64_t acc = 0;
          for (size_t c = 0; c < x.size(); ++c) {
            for (int k = 0; k < l.kernel; ++k) {
              acc += int64_t{x[c][static_cast<size_t>(t * l.stride + k)] - zp} *
                     l.weights[(static_cast<size_t>(o) * x.size() + c) * static_cast<size_t>(l.kernel) + static_cast<size_t>(k)];
            }
          }
          y[static_cast<size_t>(o)][static_cast<size_t>(t)] = requant(acc, l);
        }
      }
      x = y;
      scale = l.output_qparams.scale;
      zp = l.output_qparams.zero_point;
    } else if (l.kind == LayerKind::kRelu) {
      for (auto &ch : x) {
        for (int &v : ch) v = v > zp ? v : zp;
      }
    } else {
      Planes<int> y;
      for (const auto &ch : x) {
        std::vector<int> out;
        for (size_t t = 0; t + static_cast<size_t>(l.kernel) <= ch.size(); t += static_cast<size_t>(l.stride)) {
          int best = ch[t];
          for (int k = 1; k < l.kernel; ++k) best = std::max(best, ch[t + static_cast<size_t>(k)]);
          out.push_back(best);
        }
        y.push_back(out);
      }
      x = y;
    }
  }
  std::vector<int> out;
  for (const auto &ch : x) out.insert(out.end(), ch.begin(), ch.end());
  return out;
}

// Small random model: one or two conv blocks (kernel <= 3, optional relu
// and pool), then fully connected layers down to 5 outputs, with random
// scales and non-zero zero points. Input length <= 12.
inline QModel random_small_model(std::mt19937_64 &rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto coin = [&] { return uni(0, 1) == 1; };

  QModel m;
  m.name = "NLRAV_small";
  m.input_len = uni(6, 12);
  m.input_qparams = {real(0.5, 2.0), uni(-10, 10)};
  int channels = 1, length = m.input_len;
  double scale = m.input_qparams.scale;
  auto out_qp = [&](double w_scale, int fan_in) {
    const double s = scale * w_scale * std::sqrt(static_cast<double>(fan_in)) * real(6.0, 80.0);
    return QuantParams{s, uni(-20, 20)};
  };

  const int blocks = uni(1, 2);
  for (int b = 0; b < blocks && length >= 3; ++b) {
    const int kernel = uni(1, 3), stride = uni(1, 2), out_ch = uni(1, 3);
    const double ws = real(0.005, 0.05);
    const QuantParams qp = out_qp(ws, channels * kernel);
    m.layers.push_back(conv_layer(channels, out_ch, kernel, stride,
                                  random_int8(rng, static_cast<size_t>(out_ch * channels * kernel)), ws, qp));
    channels = out_ch;
    length = (length - kernel) / stride + 1;
    scale = qp.scale;
    if (coin()) m.layers.push_back(relu_layer());
    if (length >= 2 && coin()) {
      const int pk = uni(1, 2);
      const int ps = uni(1, 2);
      m.layers.push_back(pool_layer(pk, ps));
      length = (length - pk) / ps + 1;
    }
  }
  int features = channels * length;
  if (coin()) {
    const int hidden = uni(2, 6);
    const double ws = real(0.005, 0.05);
    const QuantParams qp = out_qp(ws, features);
    m.layers.push_back(fc_layer(features, hidden, random_int8(rng, static_cast<size_t>(hidden * features)), ws, qp));
    scale = qp.scale;
    m.layers.push_back(relu_layer());
    features = hidden;
  }
  const double ws = real(0.005, 0.05);
  m.layers.push_back(fc_layer(features, kNumClasses,
                              random_int8(rng, static_cast<size_t>(kNumClasses * features)), ws,
                              out_qp(ws, features)));
  m.finalize();
  return m;
}

}  // namespace ecgnode::testing

#endif  // ECGNODE_TESTS_SUPPORT_ORACLES_H_
