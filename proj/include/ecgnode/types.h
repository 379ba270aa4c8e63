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

// Task and operating-mode vocabulary shared by the process network, the
// runtime manager and the energy model.

#ifndef ECGNODE_TYPES_H_
#define ECGNODE_TYPES_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecgnode {

// Declaration order is scheduling priority, highest first.
enum class TaskId { kGetData = 0, kPeak, kCnn, kThreshold, kSend };
inline constexpr int kNumTasks = 5;
inline constexpr std::array<TaskId, kNumTasks> kAllTasks = {
    TaskId::kGetData, TaskId::kPeak, TaskId::kCnn, TaskId::kThreshold, TaskId::kSend};

enum class Mode { kRawData = 0, kPeakDetection, kCnnProcessing };
inline constexpr std::array<Mode, 3> kAllModes = {Mode::kRawData, Mode::kPeakDetection,
                                                  Mode::kCnnProcessing};

std::string_view task_name(TaskId id);
std::string_view mode_name(Mode mode);
// Accepts raw|peak|cnn (and the long names returned by mode_name).
std::optional<Mode> parse_mode(std::string_view s);

struct Edge {
  TaskId src;
  TaskId dst;
  friend bool operator==(const Edge &, const Edge &) = default;
};

struct Topology {
  std::vector<TaskId> tasks;
  std::vector<Edge> edges;
};

// raw:  GetData -> Send
// peak: GetData -> Peak -> Threshold -> Send
// cnn:  GetData -> Peak -> Cnn -> Threshold -> Send
const Topology &topology(Mode mode);

inline size_t task_index(TaskId id) { return static_cast<size_t>(id); }

}  // namespace ecgnode

#endif  // ECGNODE_TYPES_H_
