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

// Platform constants and the energy model: per-task energies and cycle
// counts, frequency-indexed idle power, closed-form per-mode power, battery
// lifetime and an energy ledger built from a simulation event log.

#ifndef ECGNODE_POWER_H_
#define ECGNODE_POWER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ecgnode/event_log.h"
#include "ecgnode/types.h"

namespace ecgnode {

struct CnnCost {
  int64_t cycles = 0;
  double energy_j = 0.0;
};

struct NodeConfig {
  // Energy per activation, joules.
  double e_get_data = 2.96e-6;       // E_g
  double e_get_data_peak = 3.76e-6;  // E_gp, acquisition plus peak detection
  double e_threshold = 2.73e-6;      // E_t
  double e_send = 83.96e-6;          // E_s

  int64_t cycles_get_data = 841;
  int64_t cycles_peak = 1550;
  int64_t cycles_threshold = 910;
  int64_t cycles_send = 25000;

  // Keyed by model size tag (c1_c2_fc1).
  std::map<std::string, CnnCost> cnn_models = {
      {"4_4_100", {361360, 148.78e-6}},
      {"20_20_100", {1719582, 660.37e-6}},
  };
  std::string cnn_model = "4_4_100";

  // Platform power with no task running, keyed by core clock.
  std::map<double, double> idle_power_w = {
      {2e6, 2.609e-3}, {4e6, 3.101e-3}, {8e6, 4.546e-3}};
  double sensor_power_w = 237e-6;

  double sample_rate_hz = 330.0;
  int samples_per_packet = 8;  // 1/alpha

  double alpha() const { return 1.0 / samples_per_packet; }
  const CnnCost &cnn() const;
  double idle_power(double freq_hz) const;  // throws ConfigError
  // Energy charged per activation. Peak carries E_gp - E_g so that one
  // GetData plus one Peak activation costs E_gp.
  double task_energy(TaskId task) const;
  int64_t task_cycles(TaskId task) const;

  // Throws ConfigError when a constant is non-positive or missing.
  void validate() const;
};

// INI document, every key optional:
//   [energy]   get_data_uj, get_data_peak_uj, threshold_uj, send_uj
//   [cycles]   get_data, peak, threshold, send
//   [cnn]      model = 4_4_100 ; <tag> = <cycles>,<energy_uj> ...
//   [platform] idle_mw_2mhz, idle_mw_4mhz, idle_mw_8mhz, sensor_uw,
//              sample_rate_hz, samples_per_packet
NodeConfig parse_node_config(const std::string &ini_text);
NodeConfig load_node_config(const std::filesystem::path &path);

double exec_time(TaskId task, double freq_hz, const NodeConfig &cfg);

// Closed-form average power in watts. `peak_send_rate_hz` is f_p (peak mode
// only); cnn mode sends at the heart rate.
double mode_power(Mode mode, double bpm, double peak_send_rate_hz, const NodeConfig &cfg,
                  double freq_hz);

struct Battery {
  double capacity_mah = 600.0;
  double voltage_v = 3.7;

  double energy_j() const { return capacity_mah * 1e-3 * 3600.0 * voltage_v; }
};

double battery_life_days(double power_w, const Battery &battery = {});

struct EnergyLedger {
  std::array<double, kNumTasks> task_j{};
  double idle_j = 0.0;             // platform power while the core sleeps
  double active_baseline_j = 0.0;  // platform power under running tasks
  double sensor_j = 0.0;
  double duration_s = 0.0;
  double busy_s = 0.0;
  double sleep_s = 0.0;
  std::array<double, 3> mode_time_s{};
  std::array<int64_t, kNumTasks> activations{};

  double total_j() const;
  double average_power_w() const { return duration_s > 0 ? total_j() / duration_s : 0.0; }
};

// Task energies are charged at task_end. Platform idle power is integrated
// over the whole run at the clock in force, split into sleep and busy
// parts; the sensor is on for the whole duration. The log must end with a
// sim_end event.
EnergyLedger ledger_from_sim(const EventLog &log, const NodeConfig &cfg);

// CSV: component,joules,share
std::string format_ledger_csv(const EnergyLedger &ledger);

}  // namespace ecgnode

#endif  // ECGNODE_POWER_H_
