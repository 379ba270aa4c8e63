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

#include "ecgnode/classify.h"

#include <charconv>
#include <sstream>
#include <vector>

#include "ecgnode/error.h"

namespace ecgnode {

int64_t ConfusionMatrix::total() const {
  int64_t sum = 0;
  for (const auto &row : counts) {
    for (int64_t v : row) sum += v;
  }
  return sum;
}

int64_t ConfusionMatrix::diagonal() const {
  int64_t sum = 0;
  for (int i = 0; i < kNumClasses; ++i) sum += counts[i][i];
  return sum;
}

ConfusionMatrix &ConfusionMatrix::operator+=(const ConfusionMatrix &other) {
  if (other.label_set != label_set) throw DataError("cannot add matrices of different label sets");
  for (int p = 0; p < kNumClasses; ++p) {
    for (int t = 0; t < kNumClasses; ++t) counts[p][t] += other.counts[p][t];
  }
  detector_fp += other.detector_fp;
  detector_fn += other.detector_fn;
  return *this;
}

ClassMetrics metrics(const ConfusionMatrix &cm) {
  ClassMetrics m;
  const int64_t denom = cm.total() + cm.detector_fp + cm.detector_fn;
  if (denom > 0) m.acc_paper = static_cast<double>(cm.diagonal()) / static_cast<double>(denom);

  double sens_sum = 0.0, prec_sum = 0.0;
  int sens_n = 0, prec_n = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    int64_t true_total = 0, pred_total = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      true_total += cm.counts[k][c];
      pred_total += cm.counts[c][k];
    }
    const auto hit = static_cast<double>(cm.counts[c][c]);
    if (true_total > 0) {
      m.sensitivity[c] = hit / static_cast<double>(true_total);
      sens_sum += *m.sensitivity[c];
      ++sens_n;
    }
    if (pred_total > 0) {
      m.precision[c] = hit / static_cast<double>(pred_total);
      prec_sum += *m.precision[c];
      ++prec_n;
    }
  }
  if (sens_n > 0) m.macro_sensitivity = sens_sum / sens_n;
  if (prec_n > 0) m.macro_precision = prec_sum / prec_n;
  return m;
}

std::string format_confusion_csv(const ConfusionMatrix &cm) {
  const LabelSet &labels = cm.label_set == LabelSetId::kNLRAV ? LabelSet::nlrav() : LabelSet::nsvfq();
  std::ostringstream out;
  out << "predicted\\true";
  for (char c : labels.classes) out << ',' << c;
  out << '\n';
  for (int p = 0; p < kNumClasses; ++p) {
    out << labels.classes[static_cast<size_t>(p)];
    for (int t = 0; t < kNumClasses; ++t) out << ',' << cm.counts[p][t];
    out << '\n';
  }
  out << "fp," << cm.detector_fp << '\n';
  out << "fn," << cm.detector_fn << '\n';
  return out.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  size_t pos = 0;
  while (true) {
    const size_t end = line.find(sep, pos);
    parts.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return parts;
}

int64_t parse_count(std::string_view s, size_t line) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw ParseError("<confusion>", line, "invalid count '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

ConfusionMatrix parse_confusion_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) lines.push_back(l);
  }
  if (lines.size() != 8) throw ParseError("<confusion>", 0, "expected header, 5 rows, fp and fn");

  const auto header = split(lines[0], ',');
  if (header.size() != 6) throw ParseError("<confusion>", 1, "header needs 5 class columns");
  std::string symbols;
  for (size_t i = 1; i < header.size(); ++i) {
    if (header[i].size() != 1) throw ParseError("<confusion>", 1, "class columns are single symbols");
    symbols += header[i][0];
  }
  ConfusionMatrix cm;
  if (symbols == "NLRAV") {
    cm.label_set = LabelSetId::kNLRAV;
  } else if (symbols == "NSVFQ") {
    cm.label_set = LabelSetId::kNSVFQ;
  } else {
    throw ParseError("<confusion>", 1, "unknown class columns " + symbols);
  }

  for (int p = 0; p < kNumClasses; ++p) {
    const auto cells = split(lines[static_cast<size_t>(p + 1)], ',');
    if (cells.size() != 6 || cells[0].size() != 1 || cells[0][0] != symbols[static_cast<size_t>(p)]) {
      throw ParseError("<confusion>", static_cast<size_t>(p + 2), "malformed matrix row");
    }
    for (int t = 0; t < kNumClasses; ++t) {
      cm.counts[p][t] = parse_count(cells[static_cast<size_t>(t + 1)], static_cast<size_t>(p + 2));
    }
  }
  const auto fp = split(lines[6], ',');
  const auto fn = split(lines[7], ',');
  if (fp.size() != 2 || fp[0] != "fp") throw ParseError("<confusion>", 7, "expected fp,<n>");
  if (fn.size() != 2 || fn[0] != "fn") throw ParseError("<confusion>", 8, "expected fn,<n>");
  cm.detector_fp = parse_count(fp[1], 7);
  cm.detector_fn = parse_count(fn[1], 8);
  return cm;
}

ConfusionMatrix classify_run(const QModel &model, const EcgTrace &trace,
                             std::span<const BeatAnnotation> annotations,
                             const ClassifyOptions &options) {
  ConfusionMatrix cm;
  cm.label_set = model.label_set;
  const LabelSet &labels = model.labels();
  for (const auto &a : annotations) {
    if (!labels.index_of(a.label)) {
      throw DataError(std::string("annotation label ") + a.label + " not in model label set " +
                      std::string(labels.name));
    }
  }
  if (trace.samples.empty()) {
    cm.detector_fn = static_cast<int64_t>(annotations.size());
    return cm;
  }

  const auto events = detect(options.detector, trace);
  const Outcomes outcomes = match_outcomes(events, annotations, options.tolerance);
  for (const auto &tp : outcomes.true_positives) {
    const auto frame = extract_frame(trace, tp.event_index, model.input_len);
    const auto result = infer_quant(model, quantize_frame(frame, model.input_qparams));
    const int truth = *labels.index_of(tp.label);
    ++cm.counts[result.predicted][truth];
  }
  cm.detector_fp = static_cast<int64_t>(outcomes.false_positives.size());
  cm.detector_fn = static_cast<int64_t>(outcomes.false_negatives.size());
  return cm;
}

}  // namespace ecgnode
