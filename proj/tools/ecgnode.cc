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

// ecgnode: simulate the sensor node, score detectors and classifiers, print
// closed-form power figures and write synthetic traces.
//
// Exit codes: 0 ok, 1 usage, 2 data or configuration error, 3 internal error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "ecgnode/adam.h"
#include "ecgnode/classify.h"
#include "ecgnode/dsp.h"
#include "ecgnode/error.h"
#include "ecgnode/power.h"
#include "ecgnode/procnet.h"
#include "ecgnode/qcnn.h"
#include "ecgnode/sim.h"
#include "ecgnode/trace_io.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace ecgnode {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

// Thrown for argument combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

// Run configuration assembled from the INI file, then overridden by flags.
struct RunConfig {
  NodeConfig node;
  DetectorParams detector;
  int64_t tolerance = kDefaultToleranceSamples;
  AdamConfig adam;
  ThresholdPolicy policy;
  size_t fifo_capacity = 16;
  size_t adc_buffer_capacity = 512;
};

class Ini {
 public:
  explicit Ini(const std::string &text) {
    std::istringstream in(text);
    try {
      boost::property_tree::read_ini(in, tree_);
    } catch (const boost::property_tree::ini_parser_error &e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  template <typename T>
  void read(const char *key, T &value) const {
    const auto text = tree_.get_optional<std::string>(key);
    if (!text) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (*text == "true" || *text == "1") {
        value = true;
      } else if (*text == "false" || *text == "0") {
        value = false;
      } else {
        throw ConfigError(std::string("config: ") + key + ": expected true or false");
      }
    } else {
      T parsed{};
      const char *first = text->data(), *last = first + text->size();
      auto [ptr, ec] = std::from_chars(first, last, parsed);
      if (ec != std::errc() || ptr != last) {
        throw ConfigError(std::string("config: ") + key + ": bad number '" + *text + "'");
      }
      value = parsed;
    }
  }

 private:
  boost::property_tree::ptree tree_;
};

RunConfig load_run_config(const std::string &path) {
  RunConfig rc;
  if (path.empty()) return rc;
  const std::string text = read_file(path);
  // Node sections ([energy], [cycles], [cnn], [platform]) share the file.
  rc.node = parse_node_config(text);
  const Ini ini(text);

  int64_t threshold = -1;
  ini.read("detector.threshold", threshold);
  if (threshold >= 0) rc.detector.threshold = threshold;
  ini.read("detector.threshold_fraction", rc.detector.threshold_fraction);
  ini.read("detector.learn_window_s", rc.detector.learn_window_s);
  ini.read("detector.refractory_s", rc.detector.refractory_s);
  ini.read("detector.tolerance_samples", rc.tolerance);

  ini.read("adam.period_s", rc.adam.period_s);
  ini.read("adam.util_max", rc.adam.util_max);
  ini.read("adam.raw_mode_pin_hz", rc.adam.raw_mode_pin_hz);
  ini.read("adam.bpm_window", rc.adam.bpm_window);

  ini.read("network.fifo_capacity", rc.fifo_capacity);
  ini.read("network.adc_buffer_capacity", rc.adc_buffer_capacity);

  ini.read("threshold.low_bpm", rc.policy.low_bpm);
  ini.read("threshold.high_bpm", rc.policy.high_bpm);
  ini.read("threshold.always_send", rc.policy.always_send);
  return rc;
}

Mode mode_arg(const std::string &s) {
  const auto m = parse_mode(s);
  if (!m) throw UsageError("unknown mode '" + s + "' (raw, peak or cnn)");
  return *m;
}

double freq_arg(const std::string &s) {
  double mhz = 0;
  const char *first = s.data(), *last = first + s.size();
  auto [ptr, ec] = std::from_chars(first, last, mhz);
  if (ec != std::errc() || ptr != last || !(mhz > 0)) {
    throw UsageError("frequency must be 'auto' or a value in MHz");
  }
  return mhz * 1e6;
}

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, trace, model, mode, script, out;
  std::optional<double> until_s, initial_bpm, low_bpm, high_bpm;
  std::optional<size_t> fifo;
  bool always_send = false, check = false;
};

int cmd_simulate(const SimulateArgs &a) {
  RunConfig rc = load_run_config(a.config);
  if (a.low_bpm) rc.policy.low_bpm = *a.low_bpm;
  if (a.high_bpm) rc.policy.high_bpm = *a.high_bpm;
  if (a.always_send) rc.policy.always_send = true;
  if (a.fifo) rc.fifo_capacity = *a.fifo;

  const EcgTrace trace = load_trace(a.trace);
  std::optional<QModel> model;
  if (!a.model.empty()) {
    model = load_model(a.model);
    rc.node.cnn_model = model->size_tag();
    rc.node.cnn();
  }

  SimOptions o;
  o.initial_mode = a.mode.empty() ? Mode::kRawData : mode_arg(a.mode);
  if (!a.script.empty()) o.script = load_command_script(a.script);
  o.policy = rc.policy;
  o.detector = rc.detector;
  o.adam = rc.adam;
  o.fifo_capacity = rc.fifo_capacity;
  o.adc_buffer_capacity = rc.adc_buffer_capacity;
  o.model = model ? &*model : nullptr;
  o.until_s = a.until_s;
  o.check_invariants = a.check;
  if (a.initial_bpm) o.initial_bpm = *a.initial_bpm;

  bool needs_model = o.initial_mode == Mode::kCnnProcessing;
  for (const Command &c : o.script) {
    needs_model = needs_model || (c.kind == Command::Kind::kSetMode && c.mode == Mode::kCnnProcessing);
  }
  if (needs_model && !model) throw UsageError("cnn mode needs --model");

  const SimResult r = simulate(trace, rc.node, o);
  const EnergyLedger ledger = ledger_from_sim(r.log, rc.node);

  fs::create_directories(a.out);
  const fs::path out = a.out;
  write_file(out / "events.log", format_log(r.log));
  write_file(out / "packets.bin", format_packet_log(r.packets));
  write_file(out / "packets.csv", format_packet_index(r.packets));
  write_file(out / "energy.csv", format_ledger_csv(ledger));

  std::array<int64_t, kNumClasses> per_class{};
  for (const ClassifiedBeat &b : r.classifications) ++per_class[static_cast<size_t>(b.predicted)];
  json classes = json::object();
  if (model) {
    const LabelSet &labels = model->label_set == LabelSetId::kNLRAV ? LabelSet::nlrav() : LabelSet::nsvfq();
    for (int i = 0; i < kNumClasses; ++i) {
      classes[std::string(1, labels.symbol(i))] = per_class[static_cast<size_t>(i)];
    }
  }
  int64_t packet_bytes = 0;
  for (const auto &p : r.packets) packet_bytes += static_cast<int64_t>(p.bytes.size());

  json summary;
  summary["trace"] = trace.record_id;
  summary["duration_s"] = ledger.duration_s;
  summary["final_mode"] = mode_name(r.final_mode);
  summary["final_freq_hz"] = r.final_freq_hz;
  summary["average_power_w"] = ledger.average_power_w();
  summary["battery_life_days"] =
      ledger.average_power_w() > 0 ? json(battery_life_days(ledger.average_power_w())) : json(nullptr);
  summary["energy_j"] = ledger.total_j();
  summary["busy_s"] = ledger.busy_s;
  summary["sleep_s"] = ledger.sleep_s;
  summary["packets"] = r.packets.size();
  summary["packet_bytes"] = packet_bytes;
  summary["detected_peaks"] = r.peaks.size();
  summary["classifications"] = r.classifications.size();
  summary["classes"] = classes;
  summary["samples_in"] = r.samples_in;
  summary["samples_dropped"] = r.samples_dropped;
  summary["raw_samples_discarded"] = r.raw_samples_discarded;
  summary["outputs_dropped"] = r.outputs_dropped;
  summary["overload_decisions"] = r.overload_decisions;
  summary["fifo_written"] = r.fifo_written;
  summary["fifo_read"] = r.fifo_read;
  summary["fifo_queued"] = r.fifo_queued;
  write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- score

struct ScoreArgs {
  std::string config, model, labels, out;
  std::vector<std::string> traces, annotations, from_counts;
  std::optional<int64_t> tolerance;
};

json metrics_json(const ConfusionMatrix &cm) {
  const ClassMetrics m = metrics(cm);
  const DetectorScore d = DetectorScore::from_counts(cm.total(), cm.detector_fp, cm.detector_fn);
  const LabelSet &labels = cm.label_set == LabelSetId::kNLRAV ? LabelSet::nlrav() : LabelSet::nsvfq();
  json j;
  j["label_set"] = labels.name;
  j["acc_paper"] = optional_json(m.acc_paper);
  j["tpr"] = optional_json(d.tpr);
  j["ppv"] = optional_json(d.ppv);
  json sens = json::object(), prec = json::object();
  for (int i = 0; i < kNumClasses; ++i) {
    const std::string sym(1, labels.symbol(i));
    sens[sym] = optional_json(m.sensitivity[static_cast<size_t>(i)]);
    prec[sym] = optional_json(m.precision[static_cast<size_t>(i)]);
  }
  j["sensitivity"] = sens;
  j["precision"] = prec;
  j["macro_sensitivity"] = optional_json(m.macro_sensitivity);
  j["macro_precision"] = optional_json(m.macro_precision);
  return j;
}

std::string csv_number(const std::optional<double> &v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

int cmd_score(const ScoreArgs &a) {
  json report;
  if (!a.from_counts.empty()) {
    if (!a.traces.empty()) throw UsageError("--from-counts cannot be combined with --trace");
    std::optional<ConfusionMatrix> total;
    bool mixed = false;
    json per = json::array();
    for (const auto &path : a.from_counts) {
      const ConfusionMatrix cm = parse_confusion_csv(read_file(path));
      json j{{"source", path}};
      j.update(metrics_json(cm));
      per.push_back(j);
      if (!total) {
        total = cm;
      } else if (total->label_set == cm.label_set) {
        *total += cm;
      } else {
        mixed = true;
      }
    }
    report["matrices"] = per;
    // Matrices over different label sets are reported separately only.
    if (a.from_counts.size() > 1 && !mixed) report["aggregate"] = metrics_json(*total);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  }

  if (a.traces.empty()) throw UsageError("score needs --trace or --from-counts");
  if (a.annotations.size() != a.traces.size()) {
    throw UsageError("give one --annotations file per --trace");
  }
  const RunConfig rc = load_run_config(a.config);
  const int64_t tolerance = a.tolerance.value_or(rc.tolerance);

  std::optional<QModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const LabelSet *labels = &LabelSet::nlrav();
  if (model) labels = model->label_set == LabelSetId::kNLRAV ? &LabelSet::nlrav() : &LabelSet::nsvfq();
  if (!a.labels.empty()) {
    const LabelSet &asked = LabelSet::by_name(a.labels);
    if (model && asked.id != labels->id) {
      throw DataError("annotations use " + std::string(asked.name) + " but the model predicts " +
                      std::string(labels->name));
    }
    labels = &asked;
  }

  std::ostringstream records;
  records << "record,tp,fp,fn,tpr,ppv,acc_paper\n";
  ConfusionMatrix total;
  total.label_set = labels->id;
  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < a.traces.size(); ++i) {
    const EcgTrace trace = load_trace(a.traces[i]);
    const auto ann = load_annotations(a.annotations[i], *labels);
    DetectorParams dp = rc.detector;
    dp.design_rate_hz = trace.sample_rate_hz;
    const std::string id = trace.record_id.empty() ? fs::path(a.traces[i]).stem().string() : trace.record_id;
    if (model) {
      const ConfusionMatrix cm = classify_run(*model, trace, ann, {.detector = dp, .tolerance = tolerance});
      const DetectorScore d = DetectorScore::from_counts(cm.total(), cm.detector_fp, cm.detector_fn);
      records << id << ',' << d.tp << ',' << d.fp << ',' << d.fn << ',' << csv_number(d.tpr) << ','
              << csv_number(d.ppv) << ',' << csv_number(metrics(cm).acc_paper) << '\n';
      total += cm;
    } else {
      const DetectorScore d = score(detect(dp, trace), ann, tolerance);
      records << id << ',' << d.tp << ',' << d.fp << ',' << d.fn << ',' << csv_number(d.tpr) << ','
              << csv_number(d.ppv) << ",\n";
      tp += d.tp;
      fp += d.fp;
      fn += d.fn;
    }
  }

  if (model) {
    report = metrics_json(total);
  } else {
    const DetectorScore d = DetectorScore::from_counts(tp, fp, fn);
    report["tp"] = d.tp;
    report["fp"] = d.fp;
    report["fn"] = d.fn;
    report["tpr"] = optional_json(d.tpr);
    report["ppv"] = optional_json(d.ppv);
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "records.csv", records.str());
    if (model) write_file(fs::path(a.out) / "confusion.csv", format_confusion_csv(total));
    write_file(fs::path(a.out) / "metrics.json", report.dump(2) + "\n");
  }
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- power

struct PowerArgs {
  std::string config, mode = "cnn", model, freq = "auto";
  double bpm = 60.0;
  std::optional<double> send_rate;
  bool always_send = false;
};

int cmd_power(const PowerArgs &a) {
  RunConfig rc = load_run_config(a.config);
  if (!a.model.empty()) rc.node.cnn_model = a.model;
  if (a.always_send) rc.policy.always_send = true;
  rc.node.validate();
  const Mode mode = mode_arg(a.mode);

  double freq = 0.0;
  bool overload = false;
  if (a.freq == "auto") {
    AdamInputs in;
    in.current_mode = mode;
    in.observed_bpm = a.bpm;
    in.policy = rc.policy;
    const AdamDecision d = decide(in, rc.adam, rc.node);
    freq = d.freq_hz;
    overload = d.overload;
  } else {
    freq = freq_arg(a.freq);
  }
  // Peak mode reports every beat by default, the conservative send rate.
  const double send_rate = a.send_rate.value_or(mode == Mode::kPeakDetection ? a.bpm / 60.0 : 0.0);
  const double p = mode_power(mode, a.bpm, send_rate, rc.node, freq);
  const double util = mode == Mode::kRawData
                          ? estimate_utilization(mode, a.bpm, rc.node, freq, 1.0)
                          : estimate_utilization(mode, a.bpm, rc.node, freq,
                                                 assumed_send_fraction(mode, rc.policy));

  std::printf("mode,bpm,model,freq_mhz,utilization,power_mw,battery_days,overload\n");
  std::printf("%s,%g,%s,%g,%.4f,%.4f,%.2f,%d\n", std::string(mode_name(mode)).c_str(), a.bpm,
              mode == Mode::kCnnProcessing ? rc.node.cnn_model.c_str() : "-", freq / 1e6, util,
              p * 1e3, battery_life_days(p), overload ? 1 : 0);
  return kExitOk;
}

// ------------------------------------------------------------------- synth

struct SynthArgs {
  SynthOptions opts;
  std::string trace_out, ann_out;
};

int cmd_synth(const SynthArgs &a) {
  auto [trace, beats] = synth_trace(a.opts);
  save_trace(trace, a.trace_out);
  if (!a.ann_out.empty()) save_annotations(beats, a.ann_out);
  std::cerr << "wrote " << trace.samples.size() << " samples, " << beats.size() << " beats\n";
  return kExitOk;
}

int run(int argc, char **argv) {
  CLI::App app{"ECG sensor node simulator and scoring tools"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("-c,--config", config, "INI run configuration")->check(CLI::ExistingFile);

  SimulateArgs sim;
  auto *s = app.add_subcommand("simulate", "run the node on a trace and write reports");
  s->add_option("-t,--trace", sim.trace, "input trace")->required()->check(CLI::ExistingFile);
  s->add_option("-m,--model", sim.model, "weight file (needed for cnn mode)")->check(CLI::ExistingFile);
  auto *mode_opt = s->add_option("--mode", sim.mode, "fixed mode: raw, peak or cnn");
  s->add_option("--script", sim.script, "gateway command script")
      ->check(CLI::ExistingFile)
      ->excludes(mode_opt);
  s->add_option("-o,--out", sim.out, "output directory")->required();
  s->add_option("--until", sim.until_s, "stop time in seconds");
  s->add_option("--initial-bpm", sim.initial_bpm, "heart rate assumed before the first beat");
  s->add_option("--low-bpm", sim.low_bpm, "lower bound of the normal band");
  s->add_option("--high-bpm", sim.high_bpm, "upper bound of the normal band");
  s->add_option("--fifo", sim.fifo, "FIFO capacity in messages");
  s->add_flag("--always-send", sim.always_send, "report every beat");
  s->add_flag("--check", sim.check, "verify network invariants after every step");

  ScoreArgs sc;
  auto *c = app.add_subcommand("score", "score the detector and classifier against annotations");
  c->add_option("-t,--trace", sc.traces, "trace file (repeatable)")->check(CLI::ExistingFile);
  c->add_option("-a,--annotations", sc.annotations, "annotation file per trace")
      ->check(CLI::ExistingFile);
  c->add_option("-m,--model", sc.model, "weight file; enables classification")->check(CLI::ExistingFile);
  c->add_option("--labels", sc.labels, "label set of the annotations: NLRAV or NSVFQ");
  c->add_option("--tolerance", sc.tolerance, "match tolerance in samples");
  c->add_option("--from-counts", sc.from_counts, "confusion CSV to evaluate instead of running")
      ->check(CLI::ExistingFile);
  c->add_option("-o,--out", sc.out, "directory for records.csv, confusion.csv, metrics.json");

  PowerArgs pw;
  auto *p = app.add_subcommand("power", "closed-form power and battery life");
  p->add_option("--mode", pw.mode, "raw, peak or cnn")->capture_default_str();
  p->add_option("--bpm", pw.bpm, "heart rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  p->add_option("--model", pw.model, "CNN size tag, e.g. 4_4_100");
  p->add_option("--freq", pw.freq, "'auto' or MHz")->capture_default_str();
  p->add_option("--send-rate", pw.send_rate, "peak-mode packets per second (default bpm/60)");
  p->add_flag("--always-send", pw.always_send, "size the frequency for a send on every beat");

  SynthArgs sy;
  auto *y = app.add_subcommand("synth", "write a synthetic trace with annotations");
  y->add_option("--bpm", sy.opts.bpm)->capture_default_str();
  y->add_option("--duration", sy.opts.duration_s, "seconds")->capture_default_str();
  y->add_option("--rate", sy.opts.sample_rate_hz, "sample rate in Hz")->capture_default_str();
  y->add_option("--noise", sy.opts.noise_amp, "noise std-dev in ADC units")->capture_default_str();
  y->add_option("--seed", sy.opts.seed)->capture_default_str();
  y->add_option("-o,--out", sy.trace_out, "trace file")->required();
  y->add_option("-a,--annotations", sy.ann_out, "annotation file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  sim.config = sc.config = pw.config = config;
  if (*s) return cmd_simulate(sim);
  if (*c) return cmd_score(sc);
  if (*p) return cmd_power(pw);
  return cmd_synth(sy);
}

}  // namespace
}  // namespace ecgnode

int main(int argc, char **argv) {
  try {
    return ecgnode::run(argc, argv);
  } catch (const ecgnode::UsageError &e) {
    std::cerr << "ecgnode: " << e.what() << "\n";
    return ecgnode::kExitUsage;
  } catch (const ecgnode::ParseError &e) {
    std::cerr << "ecgnode: " << e.what() << "\n";
    return ecgnode::kExitData;
  } catch (const ecgnode::DataError &e) {
    std::cerr << "ecgnode: " << e.what() << "\n";
    return ecgnode::kExitData;
  } catch (const ecgnode::ConfigError &e) {
    std::cerr << "ecgnode: " << e.what() << "\n";
    return ecgnode::kExitData;
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "ecgnode: " << e.what() << "\n";
    return ecgnode::kExitData;
  } catch (const std::exception &e) {
    std::cerr << "ecgnode: internal error: " << e.what() << "\n";
    return ecgnode::kExitInternal;
  }
}
