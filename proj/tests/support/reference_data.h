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

// Published reference numbers used by the tests and the acceptance suite.

#ifndef ECGNODE_TESTS_SUPPORT_REFERENCE_DATA_H_
#define ECGNODE_TESTS_SUPPORT_REFERENCE_DATA_H_

#include "ecgnode/classify.h"

namespace ecgnode::testing {

// Post-deployment confusion matrices, counts[predicted][true], with the
// detector's false positives and false negatives.
inline ConfusionMatrix published_nlrav() {
  ConfusionMatrix cm;
  cm.label_set = LabelSetId::kNLRAV;
  cm.counts = {{{22174, 8, 5, 59, 51},
                {41, 2431, 1, 0, 23},
                {52, 0, 2098, 24, 2},
                {135, 2, 12, 626, 7},
                {57, 2, 2, 1, 2094}}};
  cm.detector_fp = 189;
  cm.detector_fn = 107;
  return cm;
}

inline ConfusionMatrix published_nsvfq() {
  ConfusionMatrix cm;
  cm.label_set = LabelSetId::kNSVFQ;
  cm.counts = {{{26949, 60, 64, 7, 12},
                {307, 509, 19, 0, 3},
                {87, 10, 2027, 13, 3},
                {57, 2, 14, 169, 1},
                {36, 2, 6, 0, 2419}}};
  cm.detector_fp = 189;
  cm.detector_fn = 107;
  return cm;
}

inline constexpr double kPublishedAccNlrav = 0.9742;
inline constexpr double kPublishedAccNsvfq = 0.9698;

// Aggregate detector counts consistent with the published ratios.
inline constexpr int64_t kDetectorTp = 109137;
inline constexpr int64_t kDetectorFp = 636;
inline constexpr int64_t kDetectorFn = 357;
inline constexpr double kPublishedTpr = 0.99674;
inline constexpr double kPublishedPpv = 0.99421;

}  // namespace ecgnode::testing

#endif  // ECGNODE_TESTS_SUPPORT_REFERENCE_DATA_H_
