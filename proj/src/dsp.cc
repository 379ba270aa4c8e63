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

#include "ecgnode/dsp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecgnode/error.h"

namespace ecgnode {

namespace {

constexpr int64_t kInt32Max = std::numeric_limits<int32_t>::max();
constexpr int64_t kInt32Min = std::numeric_limits<int32_t>::min();

int32_t sat32(int64_t v) { return static_cast<int32_t>(std::clamp(v, kInt32Min, kInt32Max)); }

// v / 2^shift rounded half away from zero.
int64_t round_shift(int64_t v, int shift) {
  if (shift == 0) return v;
  const int64_t half = int64_t{1} << (shift - 1);
  return v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
}

}  // namespace

FilterChain::FilterChain(const FilterCoefficients &coeffs) : coeffs_(coeffs) {
  if (coeffs_.lp_length < 1) throw ConfigError("lp_length must be >= 1");
  if (coeffs_.derivative_lag < 1) throw ConfigError("derivative_lag must be >= 1");
  if (coeffs_.dc_pole_q15 < 0 || coeffs_.dc_pole_q15 >= 32768) {
    throw ConfigError("dc_pole_q15 must lie in [0, 32768)");
  }
  reset();
}

void FilterChain::reset() {
  primed_ = false;
  dc_prev_x_ = 0;
  dc_prev_y_q16_ = 0;
  lp_x_.assign(static_cast<size_t>(2 * coeffs_.lp_length + 1), 0);
  lp_pos_ = 0;
  lp_y1_ = lp_y2_ = 0;
  lp_out_ = 0;
  der_x_.assign(static_cast<size_t>(coeffs_.derivative_lag + 1), 0);
  der_pos_ = 0;
}

int32_t FilterChain::step(int16_t x) {
  // The first sample seeds the DC blocker so a non-zero starting level does
  // not look like a step.
  if (!primed_) {
    dc_prev_x_ = x;
    primed_ = true;
  }

  // DC blocker, state kept in Q16.
  const int64_t y_q16 = (static_cast<int64_t>(x - dc_prev_x_) << 16) +
                        round_shift(coeffs_.dc_pole_q15 * dc_prev_y_q16_, 15);
  dc_prev_x_ = x;
  dc_prev_y_q16_ = y_q16;
  const int64_t dc = sat32(round_shift(y_q16, 16));

  // Low-pass over a ring of the last 2m+1 inputs.
  const size_t ring = lp_x_.size();
  const auto m = static_cast<size_t>(coeffs_.lp_length);
  lp_x_[lp_pos_] = dc;
  const int64_t x_m = lp_x_[(lp_pos_ + ring - m) % ring];
  const int64_t x_2m = lp_x_[(lp_pos_ + ring - 2 * m) % ring];
  lp_pos_ = (lp_pos_ + 1) % ring;
  const int64_t lp = 2 * lp_y1_ - lp_y2_ + dc - 2 * x_m + x_2m;
  lp_y2_ = lp_y1_;
  lp_y1_ = lp;
  lp_out_ = sat32(lp);

  // First difference, then square.
  const size_t dring = der_x_.size();
  der_x_[der_pos_] = lp_out_;
  const int64_t lagged = der_x_[(der_pos_ + 1) % dring];
  der_pos_ = (der_pos_ + 1) % dring;
  const int64_t d = sat32(static_cast<int64_t>(lp_out_) - lagged);
  return sat32(std::min(d * d, kInt32Max));
}

PeakDetector::PeakDetector(const DetectorParams &params, double sample_rate_hz)
    : params_(params), sample_rate_hz_(sample_rate_hz), chain_(params.coeffs) {
  if (!(sample_rate_hz > 0)) throw DataError("sample rate must be positive");
  if (params_.threshold && *params_.threshold <= 0) throw ConfigError("threshold must be > 0");
  if (!(params_.refractory_s >= 0)) throw ConfigError("refractory must be >= 0");
  learn_samples_ = std::llround(params_.learn_window_s * sample_rate_hz_);
  refractory_ = std::llround(params_.refractory_s * sample_rate_hz_);
  reset();
}

void PeakDetector::reset() {
  chain_.reset();
  state_ = State::kBelow;
  n_ = 0;
  threshold_ = params_.threshold.value_or(1);
  running_max_ = 0;
  prev_out_ = 0;
  best_abs_lp_ = -1;
  best_index_ = 0;
  episode_max_out_ = 0;
  held_.clear();
  last_peak_.reset();
}

std::vector<PeakEvent> PeakDetector::push(int16_t sample) {
  const int64_t out = chain_.step(sample);
  const int64_t abs_lp = std::abs(static_cast<int64_t>(chain_.last_lowpass()));

  if (!params_.threshold && n_ < learn_samples_) {
    running_max_ = std::max(running_max_, out);
    threshold_ = std::max<int64_t>(
        1, static_cast<int64_t>(params_.threshold_fraction * static_cast<double>(running_max_)));
  }

  auto track = [&] {
    episode_max_out_ = std::max(episode_max_out_, out);
    if (abs_lp > best_abs_lp_) {
      best_abs_lp_ = abs_lp;
      best_index_ = n_;
    }
  };
  auto open = [&] {
    state_ = State::kAbove;
    episode_max_out_ = out;
    best_abs_lp_ = abs_lp;
    best_index_ = n_;
  };

  std::vector<PeakEvent> events;
  switch (state_) {
    case State::kBelow:
      if (out > threshold_) open();
      break;
    case State::kAbove:
      track();
      if (out < prev_out_) state_ = State::kSeekingMin;
      break;
    case State::kSeekingMin:
      if (out > prev_out_) {
        // prev sample was a local minimum.
        if (prev_out_ < threshold_) {
          close_episode(events);
          state_ = State::kBelow;
          if (out > threshold_) open();
        } else {
          state_ = State::kAbove;
          track();
        }
      } else {
        track();
      }
      break;
  }
  prev_out_ = out;
  ++n_;
  if (n_ == learn_samples_) release_held(events);
  return events;
}

std::vector<PeakEvent> PeakDetector::finish() {
  std::vector<PeakEvent> events;
  release_held(events);
  return events;
}

void PeakDetector::close_episode(std::vector<PeakEvent> &out) {
  const int64_t index = std::max<int64_t>(0, best_index_ - group_delay_samples());
  if (!params_.threshold && n_ < learn_samples_) {
    held_.push_back({index, episode_max_out_});
    return;
  }
  emit(index, out);
}

void PeakDetector::release_held(std::vector<PeakEvent> &out) {
  for (const Candidate &c : held_) {
    if (c.peak_out > threshold_) emit(c.index, out);
  }
  held_.clear();
}

void PeakDetector::emit(int64_t index, std::vector<PeakEvent> &out) {
  if (last_peak_ && (index <= *last_peak_ || index - *last_peak_ < refractory_)) return;
  PeakEvent ev;
  ev.peak_index = index;
  if (last_peak_) {
    ev.rr_samples = index - *last_peak_;
    ev.bpm = 60.0 * sample_rate_hz_ / static_cast<double>(*ev.rr_samples);
  }
  last_peak_ = index;
  out.push_back(ev);
}

std::vector<PeakEvent> detect(const DetectorParams &params, const EcgTrace &trace) {
  if (std::abs(trace.sample_rate_hz - params.design_rate_hz) > 1e-9 * params.design_rate_hz) {
    throw DataError("trace sample rate " + std::to_string(trace.sample_rate_hz) +
                    " Hz does not match detector design rate " +
                    std::to_string(params.design_rate_hz) + " Hz");
  }
  PeakDetector detector(params, trace.sample_rate_hz);
  std::vector<PeakEvent> events;
  for (int16_t s : trace.samples) {
    for (const PeakEvent &ev : detector.push(s)) events.push_back(ev);
  }
  for (const PeakEvent &ev : detector.finish()) events.push_back(ev);
  return events;
}

MatchResult match_indices(std::span<const int64_t> events, std::span<const int64_t> annotations,
                          int64_t tolerance) {
  MatchResult result;
  std::vector<bool> taken(annotations.size(), false);
  for (size_t e = 0; e < events.size(); ++e) {
    const int64_t at = events[e];
    auto it = std::lower_bound(annotations.begin(), annotations.end(), at - tolerance);
    std::optional<size_t> best;
    int64_t best_dist = 0;
    for (; it != annotations.end() && *it <= at + tolerance; ++it) {
      const auto a = static_cast<size_t>(it - annotations.begin());
      if (taken[a]) continue;
      const int64_t dist = std::abs(*it - at);
      if (!best || dist < best_dist) {
        best = a;
        best_dist = dist;
      }
    }
    if (best) {
      taken[*best] = true;
      result.true_positives.emplace_back(e, *best);
    } else {
      result.false_positives.push_back(e);
    }
  }
  for (size_t a = 0; a < annotations.size(); ++a) {
    if (!taken[a]) result.false_negatives.push_back(a);
  }
  return result;
}

Outcomes match_outcomes(std::span<const PeakEvent> events,
                        std::span<const BeatAnnotation> annotations, int64_t tolerance) {
  std::vector<int64_t> ev(events.size()), an(annotations.size());
  std::transform(events.begin(), events.end(), ev.begin(),
                 [](const PeakEvent &p) { return p.peak_index; });
  std::transform(annotations.begin(), annotations.end(), an.begin(),
                 [](const BeatAnnotation &a) { return a.peak_index; });
  const MatchResult m = match_indices(ev, an, tolerance);

  Outcomes out;
  for (auto [e, a] : m.true_positives) {
    out.true_positives.push_back({ev[e], an[a], annotations[a].label});
  }
  for (size_t e : m.false_positives) out.false_positives.push_back(ev[e]);
  for (size_t a : m.false_negatives) out.false_negatives.push_back(annotations[a]);
  return out;
}

DetectorScore DetectorScore::from_counts(int64_t tp, int64_t fp, int64_t fn) {
  DetectorScore s{tp, fp, fn, std::nullopt, std::nullopt};
  if (tp + fn > 0) s.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp + fp > 0) s.ppv = static_cast<double>(tp) / static_cast<double>(tp + fp);
  return s;
}

DetectorScore score(std::span<const PeakEvent> events,
                    std::span<const BeatAnnotation> annotations, int64_t tolerance) {
  const Outcomes o = match_outcomes(events, annotations, tolerance);
  return DetectorScore::from_counts(static_cast<int64_t>(o.true_positives.size()),
                                    static_cast<int64_t>(o.false_positives.size()),
                                    static_cast<int64_t>(o.false_negatives.size()));
}

}  // namespace ecgnode
