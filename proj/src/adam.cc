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

#include "ecgnode/adam.h"

#include <algorithm>

#include "ecgnode/error.h"

namespace ecgnode {

void AdamConfig::validate() const {
  if (!(period_s > 0)) throw ConfigError("ADAM period must be positive");
  if (!(util_max > 0 && util_max < 1)) throw ConfigError("util_max must lie in (0, 1)");
  if (freq_set.empty()) throw ConfigError("frequency set is empty");
  if (!std::is_sorted(freq_set.begin(), freq_set.end())) {
    throw ConfigError("frequency set must be ascending");
  }
  if (bpm_window < 1) throw ConfigError("bpm_window must be >= 1");
}

void AdamInputs::validate() const {
  if (!(observed_bpm >= 0)) throw DataError("observed bpm must be >= 0");
  if (!(battery_level >= 0 && battery_level <= 1)) throw DataError("battery level outside [0, 1]");
}

double assumed_send_fraction(Mode mode, const ThresholdPolicy &policy) {
  switch (mode) {
    case Mode::kRawData: return 1.0;
    case Mode::kPeakDetection: return policy.always_send ? 1.0 : 0.0;
    case Mode::kCnnProcessing: return 1.0;
  }
  return 1.0;
}

double estimate_utilization(Mode mode, double bpm, const NodeConfig &cfg, double freq_hz,
                            double send_fraction) {
  if (!(bpm >= 0)) throw DataError("bpm must be >= 0");
  if (!(freq_hz > 0)) throw ConfigError("frequency must be positive");
  const double fs = cfg.sample_rate_hz;
  const double beat_hz = bpm / 60.0;
  const auto cyc = [&](TaskId t) { return static_cast<double>(cfg.task_cycles(t)); };

  double per_sample = 0.0, per_beat = 0.0;
  switch (mode) {
    case Mode::kRawData:
      per_sample = cyc(TaskId::kGetData) + cyc(TaskId::kSend) / cfg.samples_per_packet;
      break;
    case Mode::kPeakDetection:
      per_sample = cyc(TaskId::kGetData) + cyc(TaskId::kPeak);
      per_beat = cyc(TaskId::kThreshold) + send_fraction * cyc(TaskId::kSend);
      break;
    case Mode::kCnnProcessing:
      per_sample = cyc(TaskId::kGetData) + cyc(TaskId::kPeak);
      per_beat = cyc(TaskId::kCnn) + cyc(TaskId::kThreshold) + send_fraction * cyc(TaskId::kSend);
      break;
  }
  return (per_sample * fs + per_beat * beat_hz) / freq_hz;
}

AdamDecision decide(const AdamInputs &inputs, const AdamConfig &adam_cfg,
                    const NodeConfig &node_cfg) {
  inputs.validate();
  AdamDecision d;
  d.mode = inputs.pending_mode.value_or(inputs.current_mode);
  d.sleep_enabled = true;
  d.rerouted_edges = topology(d.mode).edges;

  const double send = assumed_send_fraction(d.mode, inputs.policy);
  auto util = [&](double f) {
    return estimate_utilization(d.mode, inputs.observed_bpm, node_cfg, f, send);
  };

  if (d.mode == Mode::kRawData) {
    d.freq_hz = adam_cfg.raw_mode_pin_hz;
    d.overload = util(d.freq_hz) > adam_cfg.util_max;
    return d;
  }
  for (double f : adam_cfg.freq_set) {
    if (util(f) <= adam_cfg.util_max) {
      d.freq_hz = f;
      return d;
    }
  }
  d.freq_hz = adam_cfg.freq_set.back();
  d.overload = true;
  return d;
}

ApplyResult apply(const AdamDecision &decision, ProcessNetwork &network) {
  ApplyResult r;
  r.mode_changed = network.reconfigure(decision.mode);
  if (network.clock_hz() != decision.freq_hz) {
    network.set_clock_hz(decision.freq_hz);
    r.freq_changed = true;
  }
  return r;
}

}  // namespace ecgnode
