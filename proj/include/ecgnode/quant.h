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

// 8-bit affine quantization primitives and the fixed-point requantization
// used between integer layers.

#ifndef ECGNODE_QUANT_H_
#define ECGNODE_QUANT_H_

#include <cstdint>
#include <vector>

namespace ecgnode {

struct QuantParams {
  double scale = 1.0;
  int32_t zero_point = 0;

  double dequantize(int32_t q) const { return scale * static_cast<double>(q - zero_point); }
};

// A real multiplier represented as multiplier * 2^-shift, with the
// multiplier normalized into [2^30, 2^31).
struct Requant {
  int32_t multiplier = 0;
  int shift = 0;

  double real() const;
};

// Throws ConfigError for non-positive inputs or when the required shift
// falls outside [0, 62].
Requant quantize_multiplier(double real_multiplier);

// v / 2^shift, rounded half away from zero.
int64_t rounding_shift_right(int64_t v, int shift);

// sat8(round(acc * multiplier / 2^shift) + zero_point).
int8_t requantize(int32_t acc, const Requant &rq, int32_t zero_point);

int8_t saturate_int8(int64_t v);

// Channel-major (channels, length) int8 activations.
struct QTensor {
  int channels = 1;
  int length = 0;
  std::vector<int8_t> data;
  QuantParams qparams;

  int8_t at(int c, int t) const { return data[static_cast<size_t>(c * length + t)]; }
};

}  // namespace ecgnode

#endif  // ECGNODE_QUANT_H_
