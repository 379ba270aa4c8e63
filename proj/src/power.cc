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

#include "ecgnode/power.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ecgnode/error.h"

namespace ecgnode {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T parse_strict(const std::string &text, const std::string &key) {
  T value{};
  const char *first = text.data(), *last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("node config: " + key + ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

const CnnCost &NodeConfig::cnn() const {
  auto it = cnn_models.find(cnn_model);
  if (it == cnn_models.end()) throw ConfigError("no cost entry for CNN model " + cnn_model);
  return it->second;
}

double NodeConfig::idle_power(double freq_hz) const {
  auto it = idle_power_w.find(freq_hz);
  if (it == idle_power_w.end()) {
    throw ConfigError("unknown frequency " + std::to_string(freq_hz) + " Hz");
  }
  return it->second;
}

double NodeConfig::task_energy(TaskId task) const {
  switch (task) {
    case TaskId::kGetData: return e_get_data;
    case TaskId::kPeak: return e_get_data_peak - e_get_data;
    case TaskId::kCnn: return cnn().energy_j;
    case TaskId::kThreshold: return e_threshold;
    case TaskId::kSend: return e_send;
  }
  return 0.0;
}

int64_t NodeConfig::task_cycles(TaskId task) const {
  switch (task) {
    case TaskId::kGetData: return cycles_get_data;
    case TaskId::kPeak: return cycles_peak;
    case TaskId::kCnn: return cnn().cycles;
    case TaskId::kThreshold: return cycles_threshold;
    case TaskId::kSend: return cycles_send;
  }
  return 0;
}

void NodeConfig::validate() const {
  if (!(e_get_data > 0 && e_threshold > 0 && e_send > 0)) {
    throw ConfigError("task energies must be positive");
  }
  if (!(e_get_data_peak >= e_get_data)) throw ConfigError("E_gp must be >= E_g");
  if (cycles_get_data <= 0 || cycles_peak <= 0 || cycles_threshold <= 0 || cycles_send <= 0) {
    throw ConfigError("task cycle counts must be positive");
  }
  for (const auto &[tag, cost] : cnn_models) {
    if (cost.cycles <= 0 || !(cost.energy_j > 0)) {
      throw ConfigError("CNN model " + tag + " needs positive cycles and energy");
    }
  }
  cnn();
  if (idle_power_w.empty()) throw ConfigError("idle power table is empty");
  for (const auto &[f, p] : idle_power_w) {
    if (!(f > 0 && p > 0)) throw ConfigError("idle power entries must be positive");
  }
  if (!(sensor_power_w > 0)) throw ConfigError("sensor power must be positive");
  if (!(sample_rate_hz > 0)) throw ConfigError("sample rate must be positive");
  if (samples_per_packet <= 0) throw ConfigError("samples_per_packet must be positive");
}

NodeConfig parse_node_config(const std::string &ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("node config: ") + e.what());
  }

  // ptree's get(key, default) falls back to the default on malformed
  // values; read strings and convert strictly instead.
  auto number = [&](const char *key, auto fallback) {
    auto text = tree.get_optional<std::string>(key);
    return text ? parse_strict<decltype(fallback)>(*text, key) : fallback;
  };

  NodeConfig cfg;
  try {
    cfg.e_get_data = number("energy.get_data_uj", cfg.e_get_data * 1e6) * 1e-6;
    cfg.e_get_data_peak = number("energy.get_data_peak_uj", cfg.e_get_data_peak * 1e6) * 1e-6;
    cfg.e_threshold = number("energy.threshold_uj", cfg.e_threshold * 1e6) * 1e-6;
    cfg.e_send = number("energy.send_uj", cfg.e_send * 1e6) * 1e-6;

    cfg.cycles_get_data = number("cycles.get_data", cfg.cycles_get_data);
    cfg.cycles_peak = number("cycles.peak", cfg.cycles_peak);
    cfg.cycles_threshold = number("cycles.threshold", cfg.cycles_threshold);
    cfg.cycles_send = number("cycles.send", cfg.cycles_send);

    if (auto cnn = tree.get_child_optional("cnn")) {
      for (const auto &[key, node] : *cnn) {
        if (key == "model") {
          cfg.cnn_model = node.get_value<std::string>();
          continue;
        }
        const auto text = node.get_value<std::string>();
        const auto comma = text.find(',');
        if (comma == std::string::npos) {
          throw ConfigError("cnn." + key + " must be <cycles>,<energy_uj>");
        }
        cfg.cnn_models[key] = {parse_strict<int64_t>(text.substr(0, comma), "cnn." + key),
                               parse_strict<double>(text.substr(comma + 1), "cnn." + key) * 1e-6};
      }
    }

    const std::pair<const char *, double> idle_keys[] = {
        {"platform.idle_mw_2mhz", 2e6}, {"platform.idle_mw_4mhz", 4e6}, {"platform.idle_mw_8mhz", 8e6}};
    for (const auto &[key, f] : idle_keys) {
      if (tree.get_optional<std::string>(key)) cfg.idle_power_w[f] = number(key, 0.0) * 1e-3;
    }
    cfg.sensor_power_w = number("platform.sensor_uw", cfg.sensor_power_w * 1e6) * 1e-6;
    cfg.sample_rate_hz = number("platform.sample_rate_hz", cfg.sample_rate_hz);
    cfg.samples_per_packet = number("platform.samples_per_packet", cfg.samples_per_packet);
  } catch (const pt::ptree_bad_data &e) {
    throw ConfigError(std::string("node config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

NodeConfig load_node_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_node_config(ss.str());
}

double exec_time(TaskId task, double freq_hz, const NodeConfig &cfg) {
  if (!(freq_hz > 0)) throw ConfigError("frequency must be positive");
  return static_cast<double>(cfg.task_cycles(task)) / freq_hz;
}

double mode_power(Mode mode, double bpm, double peak_send_rate_hz, const NodeConfig &cfg,
                  double freq_hz) {
  if (!(bpm >= 0)) throw DataError("bpm must be >= 0");
  const double base = cfg.idle_power(freq_hz) + cfg.sensor_power_w;
  const double fs = cfg.sample_rate_hz;
  const double f_hr = bpm / 60.0;
  switch (mode) {
    case Mode::kRawData:
      return (cfg.e_get_data + cfg.alpha() * cfg.e_send) * fs + base;
    case Mode::kPeakDetection:
      return cfg.e_get_data_peak * fs + (cfg.e_threshold + cfg.e_send) * peak_send_rate_hz + base;
    case Mode::kCnnProcessing:
      return cfg.e_get_data_peak * fs + (cfg.cnn().energy_j + cfg.e_threshold + cfg.e_send) * f_hr +
             base;
  }
  return base;
}

double battery_life_days(double power_w, const Battery &battery) {
  if (!(power_w > 0)) throw DataError("power must be positive");
  return battery.energy_j() / power_w / 86400.0;
}

double EnergyLedger::total_j() const {
  double sum = idle_j + active_baseline_j + sensor_j;
  for (double e : task_j) sum += e;
  return sum;
}

EnergyLedger ledger_from_sim(const EventLog &log, const NodeConfig &cfg) {
  EnergyLedger ledger;
  double freq = 0.0;
  for (const auto &ev : log) {
    if (ev.kind == EventKind::kFreqChange) {
      freq = ev.freq_hz;
      break;
    }
  }
  Mode mode = Mode::kRawData;
  for (const auto &ev : log) {
    if (ev.kind == EventKind::kModeChange) {
      mode = ev.mode;
      break;
    }
  }

  double t_prev = 0.0;
  bool in_task = false;
  for (const auto &ev : log) {
    const double dt = ev.t - t_prev;
    if (dt > 0) {
      const double p_idle = freq > 0 ? cfg.idle_power(freq) : 0.0;
      if (in_task) {
        ledger.active_baseline_j += p_idle * dt;
        ledger.busy_s += dt;
      } else {
        ledger.idle_j += p_idle * dt;
        ledger.sleep_s += dt;
      }
      ledger.mode_time_s[static_cast<size_t>(mode)] += dt;
      t_prev = ev.t;
    }
    switch (ev.kind) {
      case EventKind::kTaskStart:
        in_task = true;
        break;
      case EventKind::kTaskEnd:
        in_task = false;
        ledger.task_j[task_index(ev.task)] += cfg.task_energy(ev.task);
        ++ledger.activations[task_index(ev.task)];
        break;
      case EventKind::kFreqChange:
        freq = ev.freq_hz;
        break;
      case EventKind::kModeChange:
        mode = ev.mode;
        break;
      default:
        break;
    }
  }
  ledger.duration_s = t_prev;
  ledger.sensor_j = cfg.sensor_power_w * ledger.duration_s;
  return ledger;
}

std::string format_ledger_csv(const EnergyLedger &ledger) {
  const double total = ledger.total_j();
  std::ostringstream out;
  out.precision(9);
  auto row = [&](std::string_view name, double j) {
    out << name << ',' << j << ',' << (total > 0 ? j / total : 0.0) << '\n';
  };
  out << "component,joules,share\n";
  for (TaskId t : kAllTasks) row(task_name(t), ledger.task_j[task_index(t)]);
  row("idle", ledger.idle_j);
  row("active_baseline", ledger.active_baseline_j);
  row("sensor", ledger.sensor_j);
  row("total", total);
  return out.str();
}

}  // namespace ecgnode
