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

// Application model: tasks connected by bounded FIFOs, the three operating
// mode topologies, threshold gating and the outbound packet formats.

#ifndef ECGNODE_PROCNET_H_
#define ECGNODE_PROCNET_H_

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ecgnode/dsp.h"
#include "ecgnode/power.h"
#include "ecgnode/types.h"

namespace ecgnode {

inline constexpr int kRawSamplesPerPacket = 8;

struct SampleMsg {
  int64_t index = 0;
  int16_t value = 0;
};

struct RawBatchMsg {
  std::array<int16_t, kRawSamplesPerPacket> samples{};
  uint32_t timestamp_ms = 0;
};

struct PeakMsg {
  PeakEvent event;
  uint32_t timestamp_ms = 0;
};

struct FrameMsg {
  PeakEvent event;
  std::vector<int16_t> frame;
  uint32_t timestamp_ms = 0;
};

struct ClassMsg {
  PeakEvent event;
  int predicted = 0;
  uint32_t timestamp_ms = 0;
};

// Threshold output: what Send should transmit.
struct OutboundMsg {
  Mode mode = Mode::kPeakDetection;
  int bpm = 0;
  int label = 0;
  uint32_t timestamp_ms = 0;
};

using Message = std::variant<SampleMsg, RawBatchMsg, PeakMsg, FrameMsg, ClassMsg, OutboundMsg>;

class Fifo {
 public:
  Fifo(Edge edge, size_t capacity);

  const Edge &edge() const { return edge_; }
  size_t capacity() const { return capacity_; }
  size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  bool full() const { return queue_.size() >= capacity_; }

  // Non-blocking halves of the blocking primitives; the engine parks the
  // caller when these fail. A failed write leaves `msg` untouched.
  bool try_write(Message &&msg);
  std::optional<Message> try_read();

  uint64_t written() const { return written_; }
  uint64_t read() const { return read_; }

 private:
  Edge edge_;
  size_t capacity_;
  std::deque<Message> queue_;
  uint64_t written_ = 0;
  uint64_t read_ = 0;
};

struct TaskSpec {
  TaskId id;
  int64_t cycles = 1;
  bool enabled = false;
};

struct FifoSnapshot {
  Edge edge;
  size_t size;
  size_t capacity;
  bool draining;
};

class ProcessNetwork {
 public:
  ProcessNetwork(Mode mode, const NodeConfig &cfg, size_t fifo_capacity = 16);

  Mode mode() const { return mode_; }
  // Core clock the tasks run at; 0 until the runtime manager sets it.
  double clock_hz() const { return clock_hz_; }
  void set_clock_hz(double hz) { clock_hz_ = hz; }
  size_t fifo_capacity() const { return fifo_capacity_; }
  const TaskSpec &task(TaskId id) const { return tasks_[task_index(id)]; }
  const std::vector<Fifo> &fifos() const { return active_; }
  // Edges removed by a reconfiguration that still hold messages.
  const std::vector<Fifo> &draining() const { return draining_; }

  Fifo *find(Edge e);
  Fifo *find_active(Edge e);
  // Output edge of `src`: the active one if any, else the most recently
  // deactivated draining one.
  Fifo *output_of(TaskId src);
  // Input FIFOs of `dst` in priority order: active first, then draining.
  std::vector<Fifo *> inputs_of(TaskId dst);

  // Switches to `mode`: task flags follow the new topology, new edges start
  // empty, removed edges move to the draining list with their messages until
  // retire_drained() drops them. Returns false when the mode is unchanged
  // (nothing touched).
  bool reconfigure(Mode mode);

  // Drops empty draining FIFOs whose producer will not write to them again.
  void retire_drained(const std::array<bool, kNumTasks> &producer_idle);

  // Active tasks and edges equal the topology of mode().
  bool matches_topology() const;

  // Messages ever written / read / queued over all FIFOs, retired included.
  uint64_t total_written() const;
  uint64_t total_read() const;
  uint64_t total_queued() const;

  std::vector<FifoSnapshot> snapshot() const;

 private:
  Mode mode_;
  double clock_hz_ = 0.0;
  size_t fifo_capacity_;
  std::array<TaskSpec, kNumTasks> tasks_;
  std::vector<Fifo> active_;
  std::vector<Fifo> draining_;
  uint64_t retired_written_ = 0;
  uint64_t retired_read_ = 0;
};

ProcessNetwork build_network(Mode mode, const NodeConfig &cfg, size_t fifo_capacity = 16);

struct ThresholdPolicy {
  double low_bpm = 50.0;
  double high_bpm = 120.0;
  bool always_send = false;
  // Classes reported in cnn mode. Index 0 (N) is the normal class in both
  // label sets.
  std::array<bool, 5> anomalous = {false, true, true, true, true};

  void validate() const;
};

struct ClassifiedBeat {
  PeakEvent event;
  int predicted = 0;
};

using ThresholdInput = std::variant<PeakEvent, ClassifiedBeat>;

// PeakEvent input: emit when the heart rate leaves [low, high] (the first
// beat has no rate and is only sent under always_send). ClassifiedBeat
// input: emit when the class is anomalous.
std::optional<OutboundMsg> threshold_task(const ThresholdInput &input,
                                          const ThresholdPolicy &policy, uint32_t timestamp_ms);

struct EncodedPacket {
  std::vector<uint8_t> bytes;
  bool bpm_saturated = false;
};

// raw: 8 x uint16 LE samples + uint32 LE timestamp (20 bytes)
// peak: uint8 bpm + uint32 LE timestamp (5 bytes)
// cnn: uint8 bpm + uint8 label + uint32 LE timestamp (6 bytes)
EncodedPacket encode_raw_packet(const RawBatchMsg &batch);
EncodedPacket encode_packet(const OutboundMsg &msg);

struct DecodedPacket {
  Mode mode = Mode::kRawData;
  std::array<int16_t, kRawSamplesPerPacket> samples{};
  int bpm = 0;
  int label = 0;
  uint32_t timestamp_ms = 0;
};

// Mode is inferred from the length; throws ParseError on other lengths.
DecodedPacket decode_packet(std::span<const uint8_t> bytes);

size_t packet_size(Mode mode);

struct Command {
  enum class Kind { kSetMode, kSetBand };
  double t = 0.0;
  Kind kind = Kind::kSetMode;
  Mode mode = Mode::kRawData;
  double low_bpm = 0.0;
  double high_bpm = 0.0;
};

// `<t_seconds> set_mode <raw|peak|cnn>` or `<t_seconds> set_band <low>
// <high>` per line; '#' starts a comment. Returned sorted by time, stable.
std::vector<Command> parse_command_script(std::string_view text);
std::vector<Command> load_command_script(const std::string &path);

}  // namespace ecgnode

#endif  // ECGNODE_PROCNET_H_
