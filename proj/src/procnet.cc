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

#include "ecgnode/procnet.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ecgnode/error.h"

namespace ecgnode {

Fifo::Fifo(Edge edge, size_t capacity) : edge_(edge), capacity_(capacity) {
  if (capacity == 0) throw ConfigError("FIFO capacity must be positive");
}

bool Fifo::try_write(Message &&msg) {
  if (full()) return false;
  queue_.push_back(std::move(msg));
  ++written_;
  return true;
}

std::optional<Message> Fifo::try_read() {
  if (queue_.empty()) return std::nullopt;
  Message msg = std::move(queue_.front());
  queue_.pop_front();
  ++read_;
  return msg;
}

ProcessNetwork::ProcessNetwork(Mode mode, const NodeConfig &cfg, size_t fifo_capacity)
    : mode_(mode), fifo_capacity_(fifo_capacity) {
  if (fifo_capacity == 0) throw ConfigError("FIFO capacity must be positive");
  for (TaskId id : kAllTasks) {
    // The CNN cost may be missing from a config that never runs cnn mode.
    int64_t cycles = 1;
    if (id != TaskId::kCnn || cfg.cnn_models.contains(cfg.cnn_model)) cycles = cfg.task_cycles(id);
    tasks_[task_index(id)] = TaskSpec{id, cycles, false};
  }
  for (TaskId id : topology(mode).tasks) tasks_[task_index(id)].enabled = true;
  for (const Edge &e : topology(mode).edges) active_.emplace_back(e, fifo_capacity_);
}

Fifo *ProcessNetwork::find_active(Edge e) {
  for (auto &f : active_) {
    if (f.edge() == e) return &f;
  }
  return nullptr;
}

Fifo *ProcessNetwork::find(Edge e) {
  if (Fifo *f = find_active(e)) return f;
  for (auto &f : draining_) {
    if (f.edge() == e) return &f;
  }
  return nullptr;
}

Fifo *ProcessNetwork::output_of(TaskId src) {
  for (auto &f : active_) {
    if (f.edge().src == src) return &f;
  }
  for (auto it = draining_.rbegin(); it != draining_.rend(); ++it) {
    if (it->edge().src == src) return &*it;
  }
  return nullptr;
}

std::vector<Fifo *> ProcessNetwork::inputs_of(TaskId dst) {
  std::vector<Fifo *> in;
  for (auto &f : active_) {
    if (f.edge().dst == dst) in.push_back(&f);
  }
  for (auto &f : draining_) {
    if (f.edge().dst == dst) in.push_back(&f);
  }
  return in;
}

bool ProcessNetwork::reconfigure(Mode mode) {
  if (mode == mode_) return false;
  const Topology &next = topology(mode);

  std::vector<Fifo> kept;
  for (auto &f : active_) {
    const bool stays = std::find(next.edges.begin(), next.edges.end(), f.edge()) != next.edges.end();
    if (stays) {
      kept.push_back(std::move(f));
    } else {
      draining_.push_back(std::move(f));
    }
  }
  for (const Edge &e : next.edges) {
    if (std::any_of(kept.begin(), kept.end(), [&](const Fifo &f) { return f.edge() == e; })) {
      continue;
    }
    auto it = std::find_if(draining_.begin(), draining_.end(),
                           [&](const Fifo &f) { return f.edge() == e; });
    if (it != draining_.end()) {
      kept.push_back(std::move(*it));
      draining_.erase(it);
    } else {
      kept.emplace_back(e, fifo_capacity_);
    }
  }
  // Keep active FIFOs in topology order.
  std::vector<Fifo> ordered;
  for (const Edge &e : next.edges) {
    auto it = std::find_if(kept.begin(), kept.end(), [&](const Fifo &f) { return f.edge() == e; });
    ordered.push_back(std::move(*it));
  }
  active_ = std::move(ordered);

  for (auto &t : tasks_) t.enabled = false;
  for (TaskId id : next.tasks) tasks_[task_index(id)].enabled = true;
  mode_ = mode;
  return true;
}

void ProcessNetwork::retire_drained(const std::array<bool, kNumTasks> &producer_idle) {
  std::erase_if(draining_, [&](const Fifo &f) {
    if (!f.empty()) return false;
    const TaskId src = f.edge().src;
    const bool rerouted = std::any_of(active_.begin(), active_.end(),
                                      [&](const Fifo &a) { return a.edge().src == src; });
    if (!rerouted && !producer_idle[task_index(src)]) return false;
    retired_written_ += f.written();
    retired_read_ += f.read();
    return true;
  });
}

bool ProcessNetwork::matches_topology() const {
  const Topology &topo = topology(mode_);
  for (TaskId id : kAllTasks) {
    const bool expected = std::find(topo.tasks.begin(), topo.tasks.end(), id) != topo.tasks.end();
    if (tasks_[task_index(id)].enabled != expected) return false;
  }
  if (active_.size() != topo.edges.size()) return false;
  for (size_t i = 0; i < active_.size(); ++i) {
    if (!(active_[i].edge() == topo.edges[i])) return false;
  }
  return true;
}

uint64_t ProcessNetwork::total_written() const {
  uint64_t n = retired_written_;
  for (const auto &f : active_) n += f.written();
  for (const auto &f : draining_) n += f.written();
  return n;
}

uint64_t ProcessNetwork::total_read() const {
  uint64_t n = retired_read_;
  for (const auto &f : active_) n += f.read();
  for (const auto &f : draining_) n += f.read();
  return n;
}

uint64_t ProcessNetwork::total_queued() const {
  uint64_t n = 0;
  for (const auto &f : active_) n += f.size();
  for (const auto &f : draining_) n += f.size();
  return n;
}

std::vector<FifoSnapshot> ProcessNetwork::snapshot() const {
  std::vector<FifoSnapshot> out;
  for (const auto &f : active_) out.push_back({f.edge(), f.size(), f.capacity(), false});
  for (const auto &f : draining_) out.push_back({f.edge(), f.size(), f.capacity(), true});
  return out;
}

ProcessNetwork build_network(Mode mode, const NodeConfig &cfg, size_t fifo_capacity) {
  return ProcessNetwork(mode, cfg, fifo_capacity);
}

void ThresholdPolicy::validate() const {
  if (!(low_bpm < high_bpm)) throw ConfigError("threshold band needs low_bpm < high_bpm");
}

namespace {

int rounded_bpm(const PeakEvent &ev) {
  return ev.bpm ? static_cast<int>(std::lround(*ev.bpm)) : 0;
}

}  // namespace

std::optional<OutboundMsg> threshold_task(const ThresholdInput &input,
                                          const ThresholdPolicy &policy, uint32_t timestamp_ms) {
  if (const auto *peak = std::get_if<PeakEvent>(&input)) {
    const bool out_of_band =
        peak->bpm && (*peak->bpm < policy.low_bpm || *peak->bpm > policy.high_bpm);
    if (!out_of_band && !policy.always_send) return std::nullopt;
    return OutboundMsg{Mode::kPeakDetection, rounded_bpm(*peak), 0, timestamp_ms};
  }
  const auto &beat = std::get<ClassifiedBeat>(input);
  const bool anomalous = beat.predicted >= 0 && beat.predicted < 5 &&
                         policy.anomalous[static_cast<size_t>(beat.predicted)];
  if (!anomalous && !policy.always_send) return std::nullopt;
  return OutboundMsg{Mode::kCnnProcessing, rounded_bpm(beat.event), beat.predicted, timestamp_ms};
}

namespace {

void put_u16(std::vector<uint8_t> &out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t> &out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t at) {
  return static_cast<uint32_t>(b[at]) | static_cast<uint32_t>(b[at + 1]) << 8 |
         static_cast<uint32_t>(b[at + 2]) << 16 | static_cast<uint32_t>(b[at + 3]) << 24;
}

}  // namespace

size_t packet_size(Mode mode) {
  switch (mode) {
    case Mode::kRawData: return 20;
    case Mode::kPeakDetection: return 5;
    case Mode::kCnnProcessing: return 6;
  }
  return 0;
}

EncodedPacket encode_raw_packet(const RawBatchMsg &batch) {
  EncodedPacket p;
  p.bytes.reserve(20);
  for (int16_t s : batch.samples) put_u16(p.bytes, static_cast<uint16_t>(s));
  put_u32(p.bytes, batch.timestamp_ms);
  return p;
}

EncodedPacket encode_packet(const OutboundMsg &msg) {
  EncodedPacket p;
  int bpm = msg.bpm;
  if (bpm > 255) {
    bpm = 255;
    p.bpm_saturated = true;
  }
  bpm = std::max(bpm, 0);
  p.bytes.push_back(static_cast<uint8_t>(bpm));
  if (msg.mode == Mode::kCnnProcessing) p.bytes.push_back(static_cast<uint8_t>(msg.label));
  put_u32(p.bytes, msg.timestamp_ms);
  return p;
}

DecodedPacket decode_packet(std::span<const uint8_t> b) {
  DecodedPacket d;
  switch (b.size()) {
    case 20:
      d.mode = Mode::kRawData;
      for (size_t i = 0; i < kRawSamplesPerPacket; ++i) {
        d.samples[i] = static_cast<int16_t>(static_cast<uint16_t>(b[2 * i] | b[2 * i + 1] << 8));
      }
      d.timestamp_ms = get_u32(b, 16);
      break;
    case 5:
      d.mode = Mode::kPeakDetection;
      d.bpm = b[0];
      d.timestamp_ms = get_u32(b, 1);
      break;
    case 6:
      d.mode = Mode::kCnnProcessing;
      d.bpm = b[0];
      d.label = b[1];
      d.timestamp_ms = get_u32(b, 2);
      break;
    default:
      throw ParseError("packet of " + std::to_string(b.size()) + " bytes matches no mode");
  }
  return d;
}

std::vector<Command> parse_command_script(std::string_view text) {
  std::vector<Command> commands;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string t_text, verb;
    if (!(fields >> t_text)) continue;
    Command c;
    try {
      size_t used = 0;
      c.t = std::stod(t_text, &used);
      if (used != t_text.size() || !(c.t >= 0)) throw std::invalid_argument(t_text);
    } catch (const std::exception &) {
      throw ParseError("<commands>", lineno, "invalid time '" + t_text + "'");
    }
    if (!(fields >> verb)) throw ParseError("<commands>", lineno, "missing command");
    if (verb == "set_mode") {
      std::string m;
      fields >> m;
      auto mode = parse_mode(m);
      if (!mode) throw ParseError("<commands>", lineno, "unknown mode '" + m + "'");
      c.kind = Command::Kind::kSetMode;
      c.mode = *mode;
    } else if (verb == "set_band") {
      c.kind = Command::Kind::kSetBand;
      if (!(fields >> c.low_bpm >> c.high_bpm) || !(c.low_bpm < c.high_bpm)) {
        throw ParseError("<commands>", lineno, "set_band needs <low> <high> with low < high");
      }
    } else {
      throw ParseError("<commands>", lineno, "unknown command '" + verb + "'");
    }
    std::string extra;
    if (fields >> extra) throw ParseError("<commands>", lineno, "trailing text '" + extra + "'");
    commands.push_back(c);
  }
  std::stable_sort(commands.begin(), commands.end(),
                   [](const Command &a, const Command &b) { return a.t < b.t; });
  return commands;
}

std::vector<Command> load_command_script(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_command_script(ss.str());
}

}  // namespace ecgnode
