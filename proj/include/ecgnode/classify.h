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

// Post-deployment classification: detector-centered frames through the
// quantized model, confusion matrices with detector misses folded in, and
// the accuracy figures derived from them.

#ifndef ECGNODE_CLASSIFY_H_
#define ECGNODE_CLASSIFY_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ecgnode/dsp.h"
#include "ecgnode/qcnn.h"
#include "ecgnode/trace_io.h"

namespace ecgnode {

struct ConfusionMatrix {
  LabelSetId label_set = LabelSetId::kNLRAV;
  // counts[predicted][true]
  std::array<std::array<int64_t, kNumClasses>, kNumClasses> counts{};
  int64_t detector_fp = 0;
  int64_t detector_fn = 0;

  int64_t total() const;
  int64_t diagonal() const;
  ConfusionMatrix &operator+=(const ConfusionMatrix &other);
};

struct ClassMetrics {
  // correct / (correct + detector_fp + detector_fn) over all classified beats.
  std::optional<double> acc_paper;
  std::array<std::optional<double>, kNumClasses> sensitivity;
  std::array<std::optional<double>, kNumClasses> precision;
  // Unweighted mean over the classes where the value is defined.
  std::optional<double> macro_sensitivity;
  std::optional<double> macro_precision;
};

ClassMetrics metrics(const ConfusionMatrix &cm);

// CSV layout:
//   predicted\true,N,L,R,A,V
//   N,<5 counts>
//   ... one row per predicted class
//   fp,<n>
//   fn,<n>
std::string format_confusion_csv(const ConfusionMatrix &cm);
ConfusionMatrix parse_confusion_csv(std::string_view text);

struct ClassifyOptions {
  DetectorParams detector;
  int64_t tolerance = kDefaultToleranceSamples;
};

// detect -> match -> classify each true positive on a frame centered at the
// detected index.
ConfusionMatrix classify_run(const QModel &model, const EcgTrace &trace,
                             std::span<const BeatAnnotation> annotations,
                             const ClassifyOptions &options = {});

}  // namespace ecgnode

#endif  // ECGNODE_CLASSIFY_H_
