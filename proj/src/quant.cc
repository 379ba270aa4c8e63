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

#include "ecgnode/quant.h"

#include <algorithm>
#include <cmath>

#include "ecgnode/error.h"

namespace ecgnode {

double Requant::real() const { return std::ldexp(static_cast<double>(multiplier), -shift); }

Requant quantize_multiplier(double real_multiplier) {
  if (!(real_multiplier > 0.0) || !std::isfinite(real_multiplier)) {
    throw ConfigError("requantization multiplier must be positive and finite");
  }
  int exponent = 0;
  const double q = std::frexp(real_multiplier, &exponent);  // q in [0.5, 1)
  auto fixed = static_cast<int64_t>(std::llround(std::ldexp(q, 31)));
  if (fixed == (int64_t{1} << 31)) {
    fixed /= 2;
    ++exponent;
  }
  const int shift = 31 - exponent;
  if (shift < 0 || shift > 62) {
    throw ConfigError("requantization multiplier " + std::to_string(real_multiplier) +
                      " needs shift " + std::to_string(shift) + " outside [0, 62]");
  }
  return Requant{static_cast<int32_t>(fixed), shift};
}

int64_t rounding_shift_right(int64_t v, int shift) {
  if (shift == 0) return v;
  const int64_t half = int64_t{1} << (shift - 1);
  return v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
}

int8_t saturate_int8(int64_t v) { return static_cast<int8_t>(std::clamp<int64_t>(v, -128, 127)); }

int8_t requantize(int32_t acc, const Requant &rq, int32_t zero_point) {
  const int64_t prod = static_cast<int64_t>(acc) * rq.multiplier;
  return saturate_int8(rounding_shift_right(prod, rq.shift) + zero_point);
}

}  // namespace ecgnode
