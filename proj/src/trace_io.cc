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

#include "ecgnode/trace_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "ecgnode/error.h"

namespace ecgnode {

namespace {

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

// Splits on '\n', dropping a trailing '\r' and the empty piece after a final
// newline.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

template <typename T>
bool parse_number(std::string_view s, T &out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::optional<int> LabelSet::index_of(char symbol) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == symbol) return static_cast<int>(i);
  }
  return std::nullopt;
}

const LabelSet &LabelSet::nlrav() {
  static const LabelSet set{LabelSetId::kNLRAV, "NLRAV", {'N', 'L', 'R', 'A', 'V'}};
  return set;
}

const LabelSet &LabelSet::nsvfq() {
  static const LabelSet set{LabelSetId::kNSVFQ, "NSVFQ", {'N', 'S', 'V', 'F', 'Q'}};
  return set;
}

const LabelSet &LabelSet::by_name(std::string_view name) {
  if (name == "NLRAV") return nlrav();
  if (name == "NSVFQ") return nsvfq();
  throw DataError("unknown label set " + std::string(name));
}

EcgTrace parse_trace(std::string_view text, const std::string &source) {
  const auto lines = split_lines(text);
  constexpr std::string_view kRateKey = "sample_rate_hz=";
  constexpr std::string_view kIdKey = "record_id=";

  if (lines.empty() || !lines[0].starts_with(kRateKey)) {
    throw ParseError(source, 1, "expected header sample_rate_hz=<float>");
  }
  EcgTrace trace;
  if (!parse_number(lines[0].substr(kRateKey.size()), trace.sample_rate_hz) ||
      !(trace.sample_rate_hz > 0) || !std::isfinite(trace.sample_rate_hz)) {
    throw ParseError(source, 1, "invalid sample rate");
  }
  if (lines.size() < 2 || !lines[1].starts_with(kIdKey)) {
    throw ParseError(source, 2, "expected header record_id=<string>");
  }
  trace.record_id = std::string(lines[1].substr(kIdKey.size()));

  trace.samples.reserve(lines.size() - 2);
  for (size_t i = 2; i < lines.size(); ++i) {
    int64_t v = 0;
    if (!parse_number(lines[i], v)) {
      throw ParseError(source, i + 1, "non-integer sample '" + std::string(lines[i]) + "'");
    }
    if (v < std::numeric_limits<int16_t>::min() || v > std::numeric_limits<int16_t>::max()) {
      throw ParseError(source, i + 1, "sample out of 16-bit range: " + std::to_string(v));
    }
    trace.samples.push_back(static_cast<int16_t>(v));
  }
  if (trace.samples.empty()) throw ParseError(source, lines.size(), "empty trace");
  return trace;
}

EcgTrace load_trace(const std::filesystem::path &path) {
  return parse_trace(read_file(path), path.string());
}

std::string format_trace(const EcgTrace &trace) {
  std::string out;
  out.reserve(trace.samples.size() * 6 + 64);
  out += "sample_rate_hz=" + format_double(trace.sample_rate_hz) + "\n";
  out += "record_id=" + trace.record_id + "\n";
  for (int16_t s : trace.samples) {
    out += std::to_string(s);
    out += '\n';
  }
  return out;
}

void save_trace(const EcgTrace &trace, const std::filesystem::path &path) {
  write_file(path, format_trace(trace));
}

std::vector<BeatAnnotation> parse_annotations(std::string_view text, const LabelSet &labels,
                                              const std::string &source) {
  std::vector<BeatAnnotation> out;
  const auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError(source, i + 1, "expected <peak_index>,<label>");
    }
    BeatAnnotation a;
    if (!parse_number(line.substr(0, comma), a.peak_index) || a.peak_index < 0) {
      throw ParseError(source, i + 1, "invalid peak index");
    }
    const std::string_view sym = line.substr(comma + 1);
    if (sym.size() != 1) throw ParseError(source, i + 1, "label must be one character");
    if (!labels.index_of(sym[0])) {
      throw ParseError(source, i + 1, "unknown label " + std::string(sym));
    }
    a.label = sym[0];
    out.push_back(a);
  }
  std::stable_sort(out.begin(), out.end(), [](const BeatAnnotation &a, const BeatAnnotation &b) {
    return a.peak_index < b.peak_index;
  });
  for (size_t i = 1; i < out.size(); ++i) {
    if (out[i].peak_index == out[i - 1].peak_index) {
      throw ParseError(source + ": duplicate annotation at index " +
                       std::to_string(out[i].peak_index));
    }
  }
  return out;
}

std::vector<BeatAnnotation> load_annotations(const std::filesystem::path &path,
                                             const LabelSet &labels) {
  return parse_annotations(read_file(path), labels, path.string());
}

std::string format_annotations(const std::vector<BeatAnnotation> &annotations) {
  std::string out;
  for (const auto &a : annotations) {
    out += std::to_string(a.peak_index);
    out += ',';
    out += a.label;
    out += '\n';
  }
  return out;
}

void save_annotations(const std::vector<BeatAnnotation> &annotations,
                      const std::filesystem::path &path) {
  write_file(path, format_annotations(annotations));
}

int64_t synth_spacing(double bpm, double sample_rate_hz) {
  return std::llround(sample_rate_hz * 60.0 / bpm);
}

std::pair<EcgTrace, std::vector<BeatAnnotation>> synth_trace(const SynthOptions &o) {
  if (!(o.bpm >= 20.0 && o.bpm <= 300.0)) throw DataError("bpm must lie in [20, 300]");
  if (!(o.duration_s > 0.0)) throw DataError("duration must be positive");
  if (!(o.sample_rate_hz > 0.0)) throw DataError("sample rate must be positive");

  const auto n = static_cast<int64_t>(std::llround(o.duration_s * o.sample_rate_hz));
  const int64_t spacing = synth_spacing(o.bpm, o.sample_rate_hz);

  // Spikes whose falling edge would be cut off by the end of the trace are
  // left out; neither a detector nor a human could localize them.
  const auto reach = static_cast<int64_t>(std::ceil(6.0 * o.spike_sigma));
  const auto tail = static_cast<int64_t>(std::ceil(3.0 * o.spike_sigma));
  std::vector<BeatAnnotation> beats;
  for (int64_t c = spacing / 2; c + tail < n; c += spacing) beats.push_back({c, 'N'});

  std::vector<double> wave(static_cast<size_t>(n), 0.0);
  for (const auto &b : beats) {
    const int64_t lo = std::max<int64_t>(0, b.peak_index - reach);
    const int64_t hi = std::min<int64_t>(n - 1, b.peak_index + reach);
    for (int64_t i = lo; i <= hi; ++i) {
      const double d = static_cast<double>(i - b.peak_index) / o.spike_sigma;
      wave[static_cast<size_t>(i)] += o.spike_amplitude * std::exp(-0.5 * d * d);
    }
  }

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  EcgTrace trace;
  trace.sample_rate_hz = o.sample_rate_hz;
  trace.record_id = "synth_" + std::to_string(static_cast<int64_t>(o.bpm)) + "bpm_s" +
                    std::to_string(o.seed);
  trace.samples.resize(wave.size());
  for (size_t i = 0; i < wave.size(); ++i) {
    double v = wave[i];
    if (o.noise_amp > 0.0) v += o.noise_amp * noise(rng);
    v = std::clamp(std::round(v), -32768.0, 32767.0);
    trace.samples[i] = static_cast<int16_t>(v);
  }
  return {std::move(trace), std::move(beats)};
}

}  // namespace ecgnode
