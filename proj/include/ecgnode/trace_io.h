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

// ECG trace and beat-annotation containers, the canonical text formats they
// are stored in, and a deterministic synthetic trace generator.

#ifndef ECGNODE_TRACE_IO_H_
#define ECGNODE_TRACE_IO_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecgnode {

inline constexpr double kDefaultSampleRateHz = 330.0;

struct EcgTrace {
  double sample_rate_hz = kDefaultSampleRateHz;
  std::vector<int16_t> samples;
  std::string record_id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class LabelSetId { kNLRAV, kNSVFQ };

// Five beat classes; the position of a symbol is the CNN output index.
struct LabelSet {
  LabelSetId id;
  std::string_view name;
  std::array<char, 5> classes;

  std::optional<int> index_of(char symbol) const;
  char symbol(int index) const { return classes.at(static_cast<size_t>(index)); }

  static const LabelSet &nlrav();
  static const LabelSet &nsvfq();
  // Accepts "NLRAV" or "NSVFQ"; throws DataError otherwise.
  static const LabelSet &by_name(std::string_view name);
};

struct BeatAnnotation {
  int64_t peak_index = 0;
  char label = 'N';

  friend bool operator==(const BeatAnnotation &, const BeatAnnotation &) = default;
};

// Trace file: `sample_rate_hz=<float>`, `record_id=<string>`, then one signed
// decimal sample per line.
EcgTrace parse_trace(std::string_view text, const std::string &source = "<trace>");
EcgTrace load_trace(const std::filesystem::path &path);
std::string format_trace(const EcgTrace &trace);
void save_trace(const EcgTrace &trace, const std::filesystem::path &path);

// Annotation file: `<peak_index>,<label_char>` per line. Result is sorted by
// peak index; duplicate indices and symbols outside `labels` are rejected.
std::vector<BeatAnnotation> parse_annotations(std::string_view text,
                                              const LabelSet &labels,
                                              const std::string &source = "<annotations>");
std::vector<BeatAnnotation> load_annotations(const std::filesystem::path &path,
                                             const LabelSet &labels);
std::string format_annotations(const std::vector<BeatAnnotation> &annotations);
void save_annotations(const std::vector<BeatAnnotation> &annotations,
                      const std::filesystem::path &path);

struct SynthOptions {
  double bpm = 60.0;
  double duration_s = 10.0;
  double sample_rate_hz = kDefaultSampleRateHz;
  double noise_amp = 0.0;  // std-dev of additive Gaussian noise, ADC units
  uint64_t seed = 0;
  double spike_sigma = 5.0;         // samples
  double spike_amplitude = 1200.0;  // ADC units
};

// Gaussian R spikes every round(fs*60/bpm) samples over a zero baseline, the
// first one half a period into the trace. Spikes cut off by the end of the
// trace are omitted. Every spike apex is annotated 'N'.
std::pair<EcgTrace, std::vector<BeatAnnotation>> synth_trace(const SynthOptions &options);

// Spacing in samples between synthetic beats.
int64_t synth_spacing(double bpm, double sample_rate_hz);

}  // namespace ecgnode

#endif  // ECGNODE_TRACE_IO_H_
