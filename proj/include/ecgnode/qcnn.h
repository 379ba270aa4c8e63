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

// Quantized 1D CNN: model description, weight-file I/O, the integer-only
// inference path and its floating-point reference, and frame extraction.

#ifndef ECGNODE_QCNN_H_
#define ECGNODE_QCNN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgnode/quant.h"
#include "ecgnode/trace_io.h"

namespace ecgnode {

inline constexpr int kFrameLength = 198;
inline constexpr int kNumClasses = 5;

enum class LayerKind { kConv1d, kRelu, kMaxPool1d, kFullyConnected };

const char *layer_kind_name(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  // Channels for conv/pool/relu; features for fully connected layers.
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  // conv: [out][in][kernel]; fc: [out][in]. Symmetric, zero point 0.
  std::vector<int8_t> weights;
  double weight_scale = 1.0;
  QuantParams output_qparams;
  // Derived when the model is finalized.
  Requant requant;

  bool has_weights() const {
    return kind == LayerKind::kConv1d || kind == LayerKind::kFullyConnected;
  }
};

struct QModel {
  std::string name;
  LabelSetId label_set = LabelSetId::kNLRAV;
  int input_len = kFrameLength;
  QuantParams input_qparams;
  std::vector<LayerSpec> layers;

  const LabelSet &labels() const {
    return label_set == LabelSetId::kNLRAV ? LabelSet::nlrav() : LabelSet::nsvfq();
  }
  // "4_4_100" for a model named "NLRAV_4_4_100".
  std::string size_tag() const;
  int output_size() const;

  // Propagates shapes and quantization parameters through the layer chain:
  // fills relu/pool channel counts and output qparams, derives every
  // requantization multiplier, and validates weight counts. Throws
  // DataError on inconsistent shapes.
  void finalize();

  // True when the layer sequence is conv, relu, pool, conv, relu, pool, fc,
  // relu, fc with 5 outputs.
  bool has_reference_topology() const;
};

// Weight file (JSON). `require_reference_topology` rejects anything that is
// not the two-conv/two-fc classifier shape.
QModel parse_model(const std::string &json_text, bool require_reference_topology = true);
QModel load_model(const std::filesystem::path &path, bool require_reference_topology = true);
std::string format_model(const QModel &model);
void save_model(const QModel &model, const std::filesystem::path &path);

// Layer output shape (channels, length) for each layer, given the input.
struct Shape {
  int channels;
  int length;
};
std::vector<Shape> layer_shapes(const QModel &model);

std::vector<int16_t> extract_frame(const EcgTrace &trace, int64_t center,
                                   int length = kFrameLength);

QTensor quantize_frame(std::span<const int16_t> frame, const QuantParams &qp);

std::vector<double> infer_float(const QModel &model, std::span<const int16_t> frame);
std::vector<double> infer_float(const QModel &model, std::span<const double> frame);

struct QuantResult {
  int predicted = 0;
  std::vector<int8_t> outputs;
};

QuantResult infer_quant(const QModel &model, const QTensor &input);

// Index of the largest value; ties go to the lowest index.
template <typename T>
int argmax(std::span<const T> values) {
  int best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

// Offsets -48, -45, ..., 45, 48: the original frame plus 32 copies shifted
// in steps of 3 samples.
std::vector<int> default_augment_offsets();

std::vector<std::vector<int16_t>> augment(const EcgTrace &trace, int64_t center,
                                          std::span<const int> offsets,
                                          int length = kFrameLength);

}  // namespace ecgnode

#endif  // ECGNODE_QCNN_H_
