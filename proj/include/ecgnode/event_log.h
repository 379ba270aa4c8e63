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

#ifndef ECGNODE_EVENT_LOG_H_
#define ECGNODE_EVENT_LOG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ecgnode/types.h"

namespace ecgnode {

enum class EventKind {
  kSampleIn,
  kTaskStart,
  kTaskEnd,
  kPacketOut,
  kModeChange,
  kFreqChange,
  kSleepEnter,
  kSleepExit,
  kSampleDropped,
  kSimEnd,
};

std::string_view event_kind_name(EventKind kind);

// `value` is kind specific: sample index for sample_in/dropped, packet size
// for packet_out, 0 otherwise.
struct SimEvent {
  double t = 0.0;
  EventKind kind = EventKind::kSimEnd;
  TaskId task = TaskId::kGetData;
  Mode mode = Mode::kRawData;
  double freq_hz = 0.0;
  int64_t value = 0;
};

using EventLog = std::vector<SimEvent>;

// One line per event: `<t> <kind> <task> <mode> <freq_hz> <value>`, time
// printed with 9 decimals.
std::string format_event(const SimEvent &ev);
std::string format_log(const EventLog &log);

}  // namespace ecgnode

#endif  // ECGNODE_EVENT_LOG_H_
