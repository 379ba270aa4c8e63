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

#include "ecgnode/types.h"

namespace ecgnode {

std::string_view task_name(TaskId id) {
  switch (id) {
    case TaskId::kGetData: return "GetData";
    case TaskId::kPeak: return "Peak";
    case TaskId::kCnn: return "Cnn";
    case TaskId::kThreshold: return "Threshold";
    case TaskId::kSend: return "Send";
  }
  return "?";
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kRawData: return "raw";
    case Mode::kPeakDetection: return "peak";
    case Mode::kCnnProcessing: return "cnn";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "raw" || s == "RawData") return Mode::kRawData;
  if (s == "peak" || s == "PeakDetection") return Mode::kPeakDetection;
  if (s == "cnn" || s == "CnnProcessing") return Mode::kCnnProcessing;
  return std::nullopt;
}

const Topology &topology(Mode mode) {
  using T = TaskId;
  static const Topology raw{{T::kGetData, T::kSend}, {{T::kGetData, T::kSend}}};
  static const Topology peak{{T::kGetData, T::kPeak, T::kThreshold, T::kSend},
                             {{T::kGetData, T::kPeak}, {T::kPeak, T::kThreshold},
                              {T::kThreshold, T::kSend}}};
  static const Topology cnn{{T::kGetData, T::kPeak, T::kCnn, T::kThreshold, T::kSend},
                            {{T::kGetData, T::kPeak}, {T::kPeak, T::kCnn},
                             {T::kCnn, T::kThreshold}, {T::kThreshold, T::kSend}}};
  switch (mode) {
    case Mode::kRawData: return raw;
    case Mode::kPeakDetection: return peak;
    case Mode::kCnnProcessing: return cnn;
  }
  return raw;
}

}  // namespace ecgnode
