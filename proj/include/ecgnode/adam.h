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

// Adaptive runtime manager: picks the operating mode, the lowest core clock
// that keeps the estimated utilization under a ceiling, and rewires the
// process network accordingly.

#ifndef ECGNODE_ADAM_H_
#define ECGNODE_ADAM_H_

#include <optional>
#include <vector>

#include "ecgnode/power.h"
#include "ecgnode/procnet.h"
#include "ecgnode/types.h"

namespace ecgnode {

struct AdamConfig {
  double period_s = 1.0;
  double util_max = 0.40;
  std::vector<double> freq_set = {2e6, 4e6, 8e6};  // ascending
  double raw_mode_pin_hz = 8e6;
  int bpm_window = 4;  // RR intervals in the heart-rate average

  void validate() const;
};

struct AdamInputs {
  std::optional<Mode> pending_mode;  // set_mode command from the gateway
  double observed_bpm = 0.0;
  double battery_level = 1.0;
  Mode current_mode = Mode::kRawData;
  double current_freq_hz = 0.0;
  ThresholdPolicy policy;

  void validate() const;
};

struct AdamDecision {
  Mode mode = Mode::kRawData;
  double freq_hz = 0.0;
  bool sleep_enabled = true;
  std::vector<Edge> rerouted_edges;
  // No frequency met the utilization ceiling; running at the maximum.
  bool overload = false;
};

// Fraction of beats assumed to end in a transmission: peak mode sends only
// out-of-band rates (none assumed unless always_send), cnn mode assumes
// every beat may be anomalous.
double assumed_send_fraction(Mode mode, const ThresholdPolicy &policy);

// [per-sample cycles * fs + per-beat cycles * bpm/60] / freq. The raw-mode
// per-sample cost includes one Send per packet.
double estimate_utilization(Mode mode, double bpm, const NodeConfig &cfg, double freq_hz,
                            double send_fraction);

AdamDecision decide(const AdamInputs &inputs, const AdamConfig &adam_cfg,
                    const NodeConfig &node_cfg);

struct ApplyResult {
  bool mode_changed = false;
  bool freq_changed = false;
};

// Reconfigures `network` to the decided mode and clock. Must be called
// between task activations.
ApplyResult apply(const AdamDecision &decision, ProcessNetwork &network);

// Exponential moving average of the instantaneous rate over roughly the
// last `window` RR intervals.
class HeartRateEstimator {
 public:
  HeartRateEstimator(int window, double initial_bpm)
      : alpha_(2.0 / (window + 1)), bpm_(initial_bpm) {}

  void update(double bpm) {
    bpm_ = seeded_ ? bpm_ + alpha_ * (bpm - bpm_) : bpm;
    seeded_ = true;
  }
  double bpm() const { return bpm_; }

 private:
  double alpha_;
  double bpm_;
  bool seeded_ = false;
};

}  // namespace ecgnode

#endif  // ECGNODE_ADAM_H_
