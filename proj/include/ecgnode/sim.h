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

// Deterministic discrete-event execution of the process network on a
// single non-preemptive core, with the runtime manager activated on a
// timer and on gateway commands.

#ifndef ECGNODE_SIM_H_
#define ECGNODE_SIM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecgnode/adam.h"
#include "ecgnode/dsp.h"
#include "ecgnode/event_log.h"
#include "ecgnode/power.h"
#include "ecgnode/procnet.h"
#include "ecgnode/qcnn.h"
#include "ecgnode/trace_io.h"

namespace ecgnode {

struct SimOptions {
  Mode initial_mode = Mode::kRawData;
  std::vector<Command> script;
  ThresholdPolicy policy;
  DetectorParams detector;
  const QModel *model = nullptr;  // required whenever cnn mode runs
  AdamConfig adam;
  size_t fifo_capacity = 16;
  // ADC samples buffered ahead of GetData while the core is busy.
  size_t adc_buffer_capacity = 512;
  double initial_bpm = 60.0;
  double battery_level = 1.0;
  // Defaults to the trace duration.
  std::optional<double> until_s;
  // Check topology and FIFO conservation after every step; violations throw
  // std::logic_error.
  bool check_invariants = false;
};

struct PacketRecord {
  double t = 0.0;
  Mode mode = Mode::kRawData;
  std::vector<uint8_t> bytes;
  bool bpm_saturated = false;
};

struct SimResult {
  EventLog log;
  std::vector<PacketRecord> packets;
  std::vector<PeakEvent> peaks;  // absolute trace indices
  std::vector<ClassifiedBeat> classifications;
  double duration_s = 0.0;
  int64_t samples_in = 0;
  int64_t samples_dropped = 0;
  int64_t raw_samples_discarded = 0;  // partial raw batch at a mode switch
  int64_t outputs_dropped = 0;        // produced by a task with no route left
  int64_t overload_decisions = 0;
  uint64_t fifo_written = 0;
  uint64_t fifo_read = 0;
  uint64_t fifo_queued = 0;
  Mode final_mode = Mode::kRawData;
  double final_freq_hz = 0.0;
};

SimResult simulate(const EcgTrace &trace, const NodeConfig &cfg, const SimOptions &options);

// Binary packet log: per packet a uint16 LE length followed by the bytes.
std::string format_packet_log(const std::vector<PacketRecord> &packets);
// CSV: t,mode,size
std::string format_packet_index(const std::vector<PacketRecord> &packets);

}  // namespace ecgnode

#endif  // ECGNODE_SIM_H_
