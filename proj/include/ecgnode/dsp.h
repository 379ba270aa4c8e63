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

// Simplified Pan-Tompkins front end (DC blocker, integer low-pass, first
// difference, squaring), a streaming threshold/local-minimum R-peak
// detector, and detector scoring against reference annotations.

#ifndef ECGNODE_DSP_H_
#define ECGNODE_DSP_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ecgnode/trace_io.h"

namespace ecgnode {

struct FilterCoefficients {
  // DC blocker y[n] = x[n] - x[n-1] + p*y[n-1], p in Q15 (0.995).
  int32_t dc_pole_q15 = 32604;
  // Low-pass y[n] = 2y[n-1] - y[n-2] + x[n] - 2x[n-m] + x[n-2m]. Gain m^2,
  // delay m-1 samples.
  int lp_length = 6;
  // Difference y[n] = x[n] - x[n-lag].
  int derivative_lag = 1;

  // Delay, in samples, between an input feature and the same feature in the
  // low-pass output. The detector locates peaks on that tap.
  int group_delay_samples() const { return lp_length - 1; }
};

class FilterChain {
 public:
  explicit FilterChain(const FilterCoefficients &coeffs = {});

  // Returns the squared-derivative output (always >= 0). Intermediate
  // values saturate at int32; the square is clamped to INT32_MAX.
  int32_t step(int16_t x);

  // Low-pass output of the most recent step.
  int32_t last_lowpass() const { return lp_out_; }
  const FilterCoefficients &coefficients() const { return coeffs_; }
  void reset();

 private:
  FilterCoefficients coeffs_;
  bool primed_ = false;

  int32_t dc_prev_x_ = 0;
  int64_t dc_prev_y_q16_ = 0;

  std::vector<int64_t> lp_x_;  // ring of the last 2m+1 DC outputs
  size_t lp_pos_ = 0;
  int64_t lp_y1_ = 0, lp_y2_ = 0;
  int32_t lp_out_ = 0;

  std::vector<int64_t> der_x_;  // ring of the last lag+1 low-pass outputs
  size_t der_pos_ = 0;
};

struct DetectorParams {
  FilterCoefficients coeffs;
  double design_rate_hz = kDefaultSampleRateHz;
  // Fixed threshold in filtered units. When absent the threshold is
  // learned as `threshold_fraction` of the running maximum of the filtered
  // signal over the first `learn_window_s` seconds, then frozen.
  std::optional<int64_t> threshold;
  double threshold_fraction = 0.3;
  double learn_window_s = 2.0;
  double refractory_s = 0.2;
};

struct PeakEvent {
  int64_t peak_index = 0;
  std::optional<int64_t> rr_samples;
  std::optional<double> bpm;
};

class PeakDetector {
 public:
  enum class State { kBelow, kAbove, kSeekingMin };

  PeakDetector(const DetectorParams &params, double sample_rate_hz);

  // Feeds one raw sample and returns the events it released. Episodes that
  // close while the threshold is still being learned are held back and
  // re-checked against the frozen threshold when the window ends, so the
  // first events of a trace may arrive late and in a batch.
  std::vector<PeakEvent> push(int16_t sample);
  // Releases held-back events for a trace shorter than the learning window.
  std::vector<PeakEvent> finish();

  int64_t threshold() const { return threshold_; }
  int64_t refractory_samples() const { return refractory_; }
  int64_t samples_seen() const { return n_; }
  int group_delay_samples() const { return chain_.coefficients().group_delay_samples(); }
  State state() const { return state_; }
  void reset();

 private:
  struct Candidate {
    int64_t index;
    int64_t peak_out;
  };

  void close_episode(std::vector<PeakEvent> &out);
  void emit(int64_t index, std::vector<PeakEvent> &out);
  void release_held(std::vector<PeakEvent> &out);

  DetectorParams params_;
  double sample_rate_hz_;
  FilterChain chain_;
  int64_t learn_samples_;
  int64_t refractory_;

  State state_ = State::kBelow;
  int64_t n_ = 0;
  int64_t threshold_ = 1;
  int64_t running_max_ = 0;
  int64_t prev_out_ = 0;
  int64_t best_abs_lp_ = -1;
  int64_t best_index_ = 0;
  int64_t episode_max_out_ = 0;
  std::vector<Candidate> held_;
  std::optional<int64_t> last_peak_;
};

// Runs a fresh detector over `trace`. Throws DataError when the trace rate
// differs from the rate the filter was designed for.
std::vector<PeakEvent> detect(const DetectorParams &params, const EcgTrace &trace);

inline constexpr int64_t kDefaultToleranceSamples = 50;

struct MatchResult {
  // (event position, annotation position) pairs, in event order.
  std::vector<std::pair<size_t, size_t>> true_positives;
  std::vector<size_t> false_positives;  // event positions
  std::vector<size_t> false_negatives;  // annotation positions
};

// Greedy one-to-one matching in event order: each event takes the nearest
// unmatched annotation within +/-tolerance (equal distance: the earlier one).
// Both inputs must be sorted ascending.
MatchResult match_indices(std::span<const int64_t> events,
                          std::span<const int64_t> annotations, int64_t tolerance);

struct BeatOutcome {
  int64_t event_index = 0;
  int64_t annotation_index = 0;
  char label = 'N';
};

struct Outcomes {
  std::vector<BeatOutcome> true_positives;
  std::vector<int64_t> false_positives;  // event sample indices
  std::vector<BeatAnnotation> false_negatives;
};

Outcomes match_outcomes(std::span<const PeakEvent> events,
                        std::span<const BeatAnnotation> annotations,
                        int64_t tolerance = kDefaultToleranceSamples);

struct DetectorScore {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  std::optional<double> tpr;  // tp / (tp + fn)
  std::optional<double> ppv;  // tp / (tp + fp)

  static DetectorScore from_counts(int64_t tp, int64_t fp, int64_t fn);
};

DetectorScore score(std::span<const PeakEvent> events,
                    std::span<const BeatAnnotation> annotations,
                    int64_t tolerance = kDefaultToleranceSamples);

}  // namespace ecgnode

#endif  // ECGNODE_DSP_H_
