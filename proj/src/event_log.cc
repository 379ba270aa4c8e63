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

#include "ecgnode/event_log.h"

#include <cstdio>

namespace ecgnode {

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kSampleIn: return "sample_in";
    case EventKind::kTaskStart: return "task_start";
    case EventKind::kTaskEnd: return "task_end";
    case EventKind::kPacketOut: return "packet_out";
    case EventKind::kModeChange: return "mode_change";
    case EventKind::kFreqChange: return "freq_change";
    case EventKind::kSleepEnter: return "sleep_enter";
    case EventKind::kSleepExit: return "sleep_exit";
    case EventKind::kSampleDropped: return "sample_dropped";
    case EventKind::kSimEnd: return "sim_end";
  }
  return "?";
}

std::string format_event(const SimEvent &ev) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.9f %s %s %s %.0f %lld\n", ev.t,
                event_kind_name(ev.kind).data(), task_name(ev.task).data(),
                mode_name(ev.mode).data(), ev.freq_hz, static_cast<long long>(ev.value));
  return buf;
}

std::string format_log(const EventLog &log) {
  std::string out;
  out.reserve(log.size() * 48);
  for (const auto &ev : log) out += format_event(ev);
  return out;
}

}  // namespace ecgnode
