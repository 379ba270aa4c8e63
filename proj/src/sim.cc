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

#include "ecgnode/sim.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "ecgnode/error.h"

namespace ecgnode {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();
constexpr size_t kHistoryLength = 1024;

uint32_t to_ms(double t) { return static_cast<uint32_t>(static_cast<uint64_t>(std::floor(t * 1000.0))); }

class Engine {
 public:
  Engine(const EcgTrace &trace, const NodeConfig &cfg, const SimOptions &opts)
      : trace_(trace),
        cfg_(cfg),
        opts_(opts),
        policy_(opts.policy),
        network_(opts.initial_mode, cfg, opts.fifo_capacity),
        hr_(opts.adam.bpm_window, opts.initial_bpm),
        history_(kHistoryLength, 0) {
    cfg_.validate();
    opts_.adam.validate();
    policy_.validate();
    if (opts_.adc_buffer_capacity == 0) throw ConfigError("ADC buffer capacity must be positive");
    if (!(trace_.sample_rate_hz > 0)) throw DataError("trace sample rate must be positive");
    until_ = opts_.until_s.value_or(trace_.duration_s());
    if (!(until_ >= 0)) throw ConfigError("simulation end time must be >= 0");
    if (network_.task(TaskId::kPeak).enabled) reset_peak_task();
  }

  SimResult run() {
    emit(EventKind::kModeChange, TaskId::kGetData);
    const auto n = static_cast<int64_t>(trace_.samples.size());
    const auto &cmds = opts_.script;

    while (true) {
      double tn = running_ ? busy_end_ : kNever;
      if (next_sample_ < n) tn = std::min(tn, sample_time(next_sample_));
      if (next_cmd_ < cmds.size()) tn = std::min(tn, cmds[next_cmd_].t);
      tn = std::min(tn, static_cast<double>(next_tick_) * opts_.adam.period_s);
      if (!(tn <= until_)) break;
      t_ = tn;

      if (running_ && busy_end_ <= t_) complete();
      while (next_cmd_ < cmds.size() && cmds[next_cmd_].t <= t_) {
        const Command &c = cmds[next_cmd_++];
        if (c.kind == Command::Kind::kSetBand) {
          policy_.low_bpm = c.low_bpm;
          policy_.high_bpm = c.high_bpm;
        } else {
          pending_mode_ = c.mode;
        }
        adam_due_ = true;
      }
      if (static_cast<double>(next_tick_) * opts_.adam.period_s <= t_) {
        adam_due_ = true;
        ++next_tick_;
      }
      while (next_sample_ < n && sample_time(next_sample_) <= t_) arrive(next_sample_++);
      if (!running_) dispatch();
      if (opts_.check_invariants) check_invariants();
    }

    t_ = std::max(t_, until_);
    emit(EventKind::kSimEnd, TaskId::kGetData);

    result_.duration_s = until_;
    result_.fifo_written = network_.total_written();
    result_.fifo_read = network_.total_read();
    result_.fifo_queued = network_.total_queued();
    result_.final_mode = network_.mode();
    result_.final_freq_hz = network_.clock_hz();
    return std::move(result_);
  }

 private:
  double sample_time(int64_t k) const { return static_cast<double>(k) / trace_.sample_rate_hz; }

  void emit(EventKind kind, TaskId task, int64_t value = 0) {
    result_.log.push_back({t_, kind, task, network_.mode(), network_.clock_hz(), value});
  }

  void arrive(int64_t k) {
    ++result_.samples_in;
    if (adc_.size() >= opts_.adc_buffer_capacity) {
      ++result_.samples_dropped;
      emit(EventKind::kSampleDropped, TaskId::kGetData, k);
      return;
    }
    adc_.push_back({k, trace_.samples[static_cast<size_t>(k)]});
    emit(EventKind::kSampleIn, TaskId::kGetData, k);
  }

  void dispatch() {
    if (adam_due_) {
      run_adam();
      adam_due_ = false;
    }
    if (auto next = pick()) {
      if (sleeping_) {
        emit(EventKind::kSleepExit, *next);
        sleeping_ = false;
      }
      start(*next);
      return;
    }
    for (TaskId id : kAllTasks) {
      if (!pending_out_[task_index(id)].empty()) deadlock(id);
    }
    if (!sleeping_) {
      emit(EventKind::kSleepEnter, TaskId::kGetData);
      sleeping_ = true;
    }
  }

  [[noreturn]] void deadlock(TaskId blocked) {
    std::ostringstream msg;
    msg << "deadlock at t=" << t_ << ": " << task_name(blocked) << " blocked; FIFOs:";
    for (const auto &s : network_.snapshot()) {
      msg << ' ' << task_name(s.edge.src) << "->" << task_name(s.edge.dst) << '=' << s.size << '/'
          << s.capacity << (s.draining ? "(draining)" : "");
    }
    throw DeadlockError(msg.str());
  }

  void run_adam() {
    AdamInputs in;
    in.pending_mode = pending_mode_;
    in.observed_bpm = hr_.bpm();
    in.battery_level = opts_.battery_level;
    in.current_mode = network_.mode();
    in.current_freq_hz = network_.clock_hz();
    in.policy = policy_;
    pending_mode_.reset();

    const AdamDecision d = decide(in, opts_.adam, cfg_);
    if (d.overload) ++result_.overload_decisions;
    if (d.mode == Mode::kCnnProcessing && opts_.model == nullptr) {
      throw DataError("cnn mode requested but no model was supplied");
    }
    const Mode before = network_.mode();
    const bool peak_was_enabled = network_.task(TaskId::kPeak).enabled;
    const ApplyResult r = apply(d, network_);
    if (r.mode_changed) {
      if (before == Mode::kRawData) {
        result_.raw_samples_discarded += raw_fill_;
        raw_fill_ = 0;
      }
      if (!peak_was_enabled && network_.task(TaskId::kPeak).enabled) reset_peak_task();
      retire();
      emit(EventKind::kModeChange, TaskId::kGetData);
    }
    if (r.freq_changed) emit(EventKind::kFreqChange, TaskId::kGetData);
  }

  bool has_input(TaskId id) {
    if (id == TaskId::kGetData) return !adc_.empty();
    for (Fifo *f : network_.inputs_of(id)) {
      if (!f->empty()) return true;
    }
    return false;
  }

  std::optional<TaskId> pick() {
    for (TaskId id : kAllTasks) {
      if (!pending_out_[task_index(id)].empty()) continue;
      if (has_input(id)) return id;
    }
    return std::nullopt;
  }

  void start(TaskId id) {
    if (id == TaskId::kGetData) {
      input_ = adc_.front();
      adc_.pop_front();
    } else {
      for (Fifo *f : network_.inputs_of(id)) {
        if (auto msg = f->try_read()) {
          input_ = std::move(*msg);
          flush(f->edge().src);
          break;
        }
      }
    }
    if (id == TaskId::kCnn && opts_.model == nullptr) {
      throw DataError("Cnn task activated without a model");
    }
    const double clock = network_.clock_hz();
    if (!(clock > 0)) throw ConfigError("core clock not set");
    running_ = id;
    busy_end_ = t_ + static_cast<double>(network_.task(id).cycles) / clock;
    emit(EventKind::kTaskStart, id);
  }

  void complete() {
    const TaskId id = *running_;
    running_.reset();
    emit(EventKind::kTaskEnd, id);
    auto &out = pending_out_[task_index(id)];
    switch (id) {
      case TaskId::kGetData: run_get_data(std::get<SampleMsg>(input_), out); break;
      case TaskId::kPeak: run_peak(std::get<SampleMsg>(input_), out); break;
      case TaskId::kCnn: run_cnn(std::get<FrameMsg>(input_), out); break;
      case TaskId::kThreshold: run_threshold(out); break;
      case TaskId::kSend: run_send(); break;
    }
    flush(id);
    retire();
  }

  Fifo *route(TaskId id) { return network_.output_of(id); }

  void run_get_data(const SampleMsg &s, std::deque<Message> &out) {
    Fifo *f = route(TaskId::kGetData);
    if (f == nullptr) {
      ++result_.outputs_dropped;
      return;
    }
    if (f->edge().dst == TaskId::kSend) {
      raw_batch_.samples[static_cast<size_t>(raw_fill_++)] = s.value;
      if (raw_fill_ == kRawSamplesPerPacket) {
        raw_batch_.timestamp_ms = to_ms(sample_time(s.index));
        out.emplace_back(raw_batch_);
        raw_fill_ = 0;
      }
    } else {
      out.emplace_back(s);
    }
  }

  void reset_peak_task() {
    detector_ = std::make_unique<PeakDetector>(opts_.detector, trace_.sample_rate_hz);
    detector_origin_.reset();
    pending_frames_.clear();
  }

  int16_t history_at(int64_t index) const {
    if (index < 0 || index > last_sample_ || last_sample_ - index >= static_cast<int64_t>(kHistoryLength)) {
      return 0;
    }
    return history_[static_cast<size_t>(index) % kHistoryLength];
  }

  void run_peak(const SampleMsg &s, std::deque<Message> &out) {
    if (!detector_) reset_peak_task();
    if (!detector_origin_) detector_origin_ = s.index;
    history_[static_cast<size_t>(s.index) % kHistoryLength] = s.value;
    last_sample_ = s.index;

    Fifo *f = route(TaskId::kPeak);
    const bool to_cnn = f != nullptr && f->edge().dst == TaskId::kCnn;

    for (PeakEvent ev : detector_->push(s.value)) {
      ev.peak_index += *detector_origin_;
      result_.peaks.push_back(ev);
      if (ev.bpm) hr_.update(*ev.bpm);
      pending_frames_.push_back(ev);
    }

    const int len = opts_.model != nullptr ? opts_.model->input_len : kFrameLength;
    while (!pending_frames_.empty()) {
      const PeakEvent &ev = pending_frames_.front();
      const uint32_t ts = to_ms(sample_time(ev.peak_index));
      if (f == nullptr) {
        ++result_.outputs_dropped;
      } else if (!to_cnn) {
        out.emplace_back(PeakMsg{ev, ts});
      } else {
        const int64_t last_needed = ev.peak_index - len / 2 + len - 1;
        if (last_needed > s.index) break;
        FrameMsg fm{ev, std::vector<int16_t>(static_cast<size_t>(len)), ts};
        for (int i = 0; i < len; ++i) fm.frame[static_cast<size_t>(i)] = history_at(ev.peak_index - len / 2 + i);
        out.emplace_back(std::move(fm));
      }
      pending_frames_.pop_front();
    }
  }

  void run_cnn(const FrameMsg &fm, std::deque<Message> &out) {
    const QModel &model = *opts_.model;
    const QuantResult r = infer_quant(model, quantize_frame(fm.frame, model.input_qparams));
    result_.classifications.push_back({fm.event, r.predicted});
    out.emplace_back(ClassMsg{fm.event, r.predicted, fm.timestamp_ms});
  }

  void run_threshold(std::deque<Message> &out) {
    std::optional<OutboundMsg> msg;
    if (const auto *p = std::get_if<PeakMsg>(&input_)) {
      msg = threshold_task(p->event, policy_, p->timestamp_ms);
    } else {
      const auto &c = std::get<ClassMsg>(input_);
      msg = threshold_task(ClassifiedBeat{c.event, c.predicted}, policy_, c.timestamp_ms);
    }
    if (msg) out.emplace_back(*msg);
  }

  void run_send() {
    PacketRecord rec;
    rec.t = t_;
    EncodedPacket p;
    if (const auto *raw = std::get_if<RawBatchMsg>(&input_)) {
      p = encode_raw_packet(*raw);
      rec.mode = Mode::kRawData;
    } else {
      const auto &o = std::get<OutboundMsg>(input_);
      p = encode_packet(o);
      rec.mode = o.mode;
    }
    rec.bytes = std::move(p.bytes);
    rec.bpm_saturated = p.bpm_saturated;
    emit(EventKind::kPacketOut, TaskId::kSend, static_cast<int64_t>(rec.bytes.size()));
    result_.packets.push_back(std::move(rec));
  }

  // Completes blocked writes of `id` as far as FIFO space allows.
  void flush(TaskId id) {
    auto &out = pending_out_[task_index(id)];
    while (!out.empty()) {
      Fifo *f = route(id);
      if (f == nullptr) {
        result_.outputs_dropped += static_cast<int64_t>(out.size());
        out.clear();
        return;
      }
      if (!f->try_write(std::move(out.front()))) return;
      out.pop_front();
    }
  }

  void retire() {
    std::array<bool, kNumTasks> idle{};
    for (TaskId id : kAllTasks) {
      const size_t i = task_index(id);
      idle[i] = !network_.task(id).enabled && running_ != id && pending_out_[i].empty() &&
                !has_input(id);
    }
    network_.retire_drained(idle);
  }

  void check_invariants() {
    if (!network_.matches_topology()) throw std::logic_error("network does not match mode topology");
    auto check = [](const Fifo &f) {
      if (f.written() != f.read() + f.size()) throw std::logic_error("FIFO lost a message");
      if (f.size() > f.capacity()) throw std::logic_error("FIFO over capacity");
    };
    for (const auto &f : network_.fifos()) check(f);
    for (const auto &f : network_.draining()) check(f);
    if (network_.total_written() != network_.total_read() + network_.total_queued()) {
      throw std::logic_error("network message count mismatch");
    }
  }

  const EcgTrace &trace_;
  NodeConfig cfg_;
  SimOptions opts_;
  ThresholdPolicy policy_;
  ProcessNetwork network_;
  HeartRateEstimator hr_;
  double until_ = 0.0;

  double t_ = 0.0;
  int64_t next_sample_ = 0;
  size_t next_cmd_ = 0;
  int64_t next_tick_ = 0;
  bool adam_due_ = false;
  std::optional<Mode> pending_mode_;
  bool sleeping_ = false;

  std::optional<TaskId> running_;
  double busy_end_ = 0.0;
  Message input_;
  std::array<std::deque<Message>, kNumTasks> pending_out_;

  std::deque<SampleMsg> adc_;
  RawBatchMsg raw_batch_;
  int raw_fill_ = 0;

  std::unique_ptr<PeakDetector> detector_;
  std::optional<int64_t> detector_origin_;
  std::deque<PeakEvent> pending_frames_;
  std::vector<int16_t> history_;
  int64_t last_sample_ = -1;

  SimResult result_;
};

}  // namespace

SimResult simulate(const EcgTrace &trace, const NodeConfig &cfg, const SimOptions &options) {
  Engine engine(trace, cfg, options);
  return engine.run();
}

std::string format_packet_log(const std::vector<PacketRecord> &packets) {
  std::string out;
  for (const auto &p : packets) {
    const auto len = static_cast<uint16_t>(p.bytes.size());
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>(len >> 8));
    out.append(p.bytes.begin(), p.bytes.end());
  }
  return out;
}

std::string format_packet_index(const std::vector<PacketRecord> &packets) {
  std::ostringstream out;
  out << "t,mode,size\n";
  char buf[32];
  for (const auto &p : packets) {
    std::snprintf(buf, sizeof(buf), "%.9f", p.t);
    out << buf << ',' << mode_name(p.mode) << ',' << p.bytes.size() << '\n';
  }
  return out.str();
}

}  // namespace ecgnode
