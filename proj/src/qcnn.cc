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

#include "ecgnode/qcnn.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgnode/error.h"

namespace ecgnode {

using nlohmann::json;

namespace {

LayerKind parse_kind(const std::string &s) {
  if (s == "conv1d") return LayerKind::kConv1d;
  if (s == "relu") return LayerKind::kRelu;
  if (s == "maxpool1d") return LayerKind::kMaxPool1d;
  if (s == "fully_connected") return LayerKind::kFullyConnected;
  throw ParseError("unknown layer kind '" + s + "'");
}

template <typename T>
T required(const json &j, const char *key, const std::string &where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

const char *layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kFullyConnected: return "fully_connected";
  }
  return "?";
}

std::string QModel::size_tag() const {
  const std::string prefix = std::string(labels().name) + "_";
  if (name.starts_with(prefix)) return name.substr(prefix.size());
  return name;
}

int QModel::output_size() const {
  const auto shapes = layer_shapes(*this);
  if (shapes.empty()) return input_len;
  return shapes.back().channels * shapes.back().length;
}

std::vector<Shape> layer_shapes(const QModel &model) {
  std::vector<Shape> shapes;
  Shape s{1, model.input_len};
  for (const auto &layer : model.layers) {
    switch (layer.kind) {
      case LayerKind::kConv1d:
        s = {layer.out_channels, (s.length - layer.kernel) / layer.stride + 1};
        break;
      case LayerKind::kMaxPool1d:
        s.length = (s.length - layer.kernel) / layer.stride + 1;
        break;
      case LayerKind::kFullyConnected:
        s = {layer.out_channels, 1};
        break;
      case LayerKind::kRelu:
        break;
    }
    shapes.push_back(s);
  }
  return shapes;
}

void QModel::finalize() {
  if (input_len <= 0) throw DataError("input_len must be positive");
  if (!(input_qparams.scale > 0)) throw DataError("input scale must be positive");
  int channels = 1;
  int length = input_len;
  QuantParams qp = input_qparams;
  constexpr int64_t kAccLimit = std::numeric_limits<int32_t>::max() / (255 * 128);

  for (size_t i = 0; i < layers.size(); ++i) {
    LayerSpec &l = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + ")";
    auto check_window = [&] {
      if (l.kernel < 1 || l.stride < 1) throw DataError(where + ": kernel/stride must be >= 1");
      if (length < l.kernel) throw DataError(where + ": input length shorter than kernel");
    };
    auto check_output_qparams = [&] {
      if (!(l.output_qparams.scale > 0)) throw DataError(where + ": output scale must be > 0");
      if (l.output_qparams.zero_point < -128 || l.output_qparams.zero_point > 127) {
        throw DataError(where + ": output zero point outside int8");
      }
      if (!(l.weight_scale > 0)) throw DataError(where + ": weight scale must be > 0");
    };

    switch (l.kind) {
      case LayerKind::kConv1d: {
        if (l.in_channels != channels) {
          throw DataError(where + ": expects " + std::to_string(l.in_channels) +
                          " input channels, got " + std::to_string(channels));
        }
        if (l.out_channels < 1) throw DataError(where + ": out_channels must be >= 1");
        check_window();
        check_output_qparams();
        const size_t expected = static_cast<size_t>(l.out_channels) * l.in_channels * l.kernel;
        if (l.weights.size() != expected) {
          throw DataError(where + ": expected " + std::to_string(expected) + " weights, got " +
                          std::to_string(l.weights.size()));
        }
        if (static_cast<int64_t>(l.in_channels) * l.kernel > kAccLimit) {
          throw DataError(where + ": accumulator could overflow int32");
        }
        l.requant = quantize_multiplier(qp.scale * l.weight_scale / l.output_qparams.scale);
        length = (length - l.kernel) / l.stride + 1;
        channels = l.out_channels;
        qp = l.output_qparams;
        break;
      }
      case LayerKind::kFullyConnected: {
        const int features = channels * length;
        if (l.in_channels != features) {
          throw DataError(where + ": expects " + std::to_string(l.in_channels) +
                          " input features, got " + std::to_string(features));
        }
        if (l.out_channels < 1) throw DataError(where + ": out_features must be >= 1");
        check_output_qparams();
        const size_t expected = static_cast<size_t>(l.out_channels) * l.in_channels;
        if (l.weights.size() != expected) {
          throw DataError(where + ": expected " + std::to_string(expected) + " weights, got " +
                          std::to_string(l.weights.size()));
        }
        if (l.in_channels > kAccLimit) throw DataError(where + ": accumulator could overflow int32");
        l.kernel = 1;
        l.stride = 1;
        l.requant = quantize_multiplier(qp.scale * l.weight_scale / l.output_qparams.scale);
        channels = l.out_channels;
        length = 1;
        qp = l.output_qparams;
        break;
      }
      case LayerKind::kMaxPool1d:
        check_window();
        l.in_channels = l.out_channels = channels;
        l.output_qparams = qp;
        length = (length - l.kernel) / l.stride + 1;
        break;
      case LayerKind::kRelu:
        l.in_channels = l.out_channels = channels;
        l.output_qparams = qp;
        break;
    }
  }
}

bool QModel::has_reference_topology() const {
  static constexpr LayerKind kExpected[] = {
      LayerKind::kConv1d, LayerKind::kRelu, LayerKind::kMaxPool1d,
      LayerKind::kConv1d, LayerKind::kRelu, LayerKind::kMaxPool1d,
      LayerKind::kFullyConnected, LayerKind::kRelu, LayerKind::kFullyConnected};
  if (layers.size() != std::size(kExpected)) return false;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind != kExpected[i]) return false;
  }
  return layers.back().out_channels == kNumClasses;
}

QModel parse_model(const std::string &json_text, bool require_reference_topology) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("weight file: ") + e.what());
  }
  QModel m;
  m.name = required<std::string>(doc, "name", "weight file");
  try {
    m.label_set = LabelSet::by_name(required<std::string>(doc, "label_set", "weight file")).id;
  } catch (const DataError &e) {
    throw ParseError(std::string("weight file: ") + e.what());
  }
  m.input_len = required<int>(doc, "input_len", "weight file");
  m.input_qparams.scale = required<double>(doc, "input_scale", "weight file");
  m.input_qparams.zero_point = doc.value("input_zero_point", 0);
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw ParseError("weight file: missing layers[]");
  }

  for (size_t i = 0; i < doc["layers"].size(); ++i) {
    const json &jl = doc["layers"][i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    LayerSpec l;
    l.kind = parse_kind(required<std::string>(jl, "kind", where));
    switch (l.kind) {
      case LayerKind::kConv1d:
        l.in_channels = required<int>(jl, "in_channels", where);
        l.out_channels = required<int>(jl, "out_channels", where);
        l.kernel = required<int>(jl, "kernel", where);
        l.stride = jl.value("stride", 1);
        break;
      case LayerKind::kFullyConnected:
        l.in_channels = required<int>(jl, "in_features", where);
        l.out_channels = required<int>(jl, "out_features", where);
        break;
      case LayerKind::kMaxPool1d:
        l.kernel = required<int>(jl, "kernel", where);
        l.stride = jl.value("stride", l.kernel);
        break;
      case LayerKind::kRelu:
        break;
    }
    if (l.has_weights()) {
      if (!jl.contains("weights") || !jl["weights"].is_array()) {
        throw ParseError(where + ": weights must be an array of integers");
      }
      for (const json &w : jl["weights"]) {
        if (!w.is_number_integer()) throw ParseError(where + ": weights must be integers");
        const auto v = w.get<int64_t>();
        if (v < -128 || v > 127) throw ParseError(where + ": weight outside int8");
        l.weights.push_back(static_cast<int8_t>(v));
      }
      if (jl.contains("bias")) {
        for (double b : required<std::vector<double>>(jl, "bias", where)) {
          if (b != 0.0) throw ParseError(where + ": bias must be zero");
        }
      }
      l.weight_scale = required<double>(jl, "weight_scale", where);
      l.output_qparams.scale = required<double>(jl, "output_scale", where);
      l.output_qparams.zero_point = jl.value("output_zero_point", 0);
    }
    m.layers.push_back(std::move(l));
  }

  try {
    m.finalize();
  } catch (const ConfigError &e) {
    throw ParseError(std::string("weight file: ") + e.what());
  } catch (const DataError &e) {
    throw ParseError(std::string("weight file: ") + e.what());
  }

  // Stored multipliers are informational; when present they must agree with
  // the ones derived from the scales.
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const json &jl = doc["layers"][i];
    if (!m.layers[i].has_weights() || !jl.contains("requant_multiplier")) continue;
    if (jl["requant_multiplier"].get<int64_t>() != m.layers[i].requant.multiplier ||
        jl.value("requant_shift", -1) != m.layers[i].requant.shift) {
      throw ParseError("layers[" + std::to_string(i) + "]: stored requant does not match scales");
    }
  }

  if (require_reference_topology && !m.has_reference_topology()) {
    throw ParseError("weight file: layers are not conv,relu,pool,conv,relu,pool,fc,relu,fc(5)");
  }
  return m;
}

QModel load_model(const std::filesystem::path &path, bool require_reference_topology) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), require_reference_topology);
}

std::string format_model(const QModel &model) {
  json doc;
  doc["name"] = model.name;
  doc["label_set"] = std::string(model.labels().name);
  doc["input_len"] = model.input_len;
  doc["input_scale"] = model.input_qparams.scale;
  doc["input_zero_point"] = model.input_qparams.zero_point;
  doc["layers"] = json::array();
  for (const auto &l : model.layers) {
    json jl;
    jl["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::kConv1d:
        jl["in_channels"] = l.in_channels;
        jl["out_channels"] = l.out_channels;
        jl["kernel"] = l.kernel;
        jl["stride"] = l.stride;
        break;
      case LayerKind::kFullyConnected:
        jl["in_features"] = l.in_channels;
        jl["out_features"] = l.out_channels;
        break;
      case LayerKind::kMaxPool1d:
        jl["kernel"] = l.kernel;
        jl["stride"] = l.stride;
        break;
      case LayerKind::kRelu:
        break;
    }
    if (l.has_weights()) {
      jl["weight_scale"] = l.weight_scale;
      jl["output_scale"] = l.output_qparams.scale;
      jl["output_zero_point"] = l.output_qparams.zero_point;
      jl["requant_multiplier"] = l.requant.multiplier;
      jl["requant_shift"] = l.requant.shift;
      std::vector<int> w(l.weights.begin(), l.weights.end());
      jl["weights"] = w;
    }
    doc["layers"].push_back(std::move(jl));
  }
  return doc.dump() + "\n";
}

void save_model(const QModel &model, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << format_model(model);
}

std::vector<int16_t> extract_frame(const EcgTrace &trace, int64_t center, int length) {
  std::vector<int16_t> frame(static_cast<size_t>(length), 0);
  const int64_t start = center - length / 2;
  const auto n = static_cast<int64_t>(trace.samples.size());
  for (int64_t i = 0; i < length; ++i) {
    const int64_t src = start + i;
    if (src >= 0 && src < n) frame[static_cast<size_t>(i)] = trace.samples[static_cast<size_t>(src)];
  }
  return frame;
}

QTensor quantize_frame(std::span<const int16_t> frame, const QuantParams &qp) {
  if (!(qp.scale > 0)) throw DataError("quantization scale must be positive");
  QTensor t;
  t.channels = 1;
  t.length = static_cast<int>(frame.size());
  t.qparams = qp;
  t.data.resize(frame.size());
  for (size_t i = 0; i < frame.size(); ++i) {
    const double q = std::round(static_cast<double>(frame[i]) / qp.scale) + qp.zero_point;
    t.data[i] = static_cast<int8_t>(std::clamp(q, -128.0, 127.0));
  }
  return t;
}

std::vector<double> infer_float(const QModel &model, std::span<const int16_t> frame) {
  std::vector<double> x(frame.begin(), frame.end());
  return infer_float(model, std::span<const double>(x));
}

std::vector<double> infer_float(const QModel &model, std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != model.input_len) {
    throw DataError("frame length " + std::to_string(frame.size()) + " != model input_len " +
                    std::to_string(model.input_len));
  }
  int channels = 1;
  int length = model.input_len;
  std::vector<double> x(frame.begin(), frame.end());

  for (const auto &l : model.layers) {
    switch (l.kind) {
      case LayerKind::kConv1d: {
        const int out_len = (length - l.kernel) / l.stride + 1;
        std::vector<double> y(static_cast<size_t>(l.out_channels) * out_len, 0.0);
        for (int o = 0; o < l.out_channels; ++o) {
          for (int t = 0; t < out_len; ++t) {
            double acc = 0.0;
            for (int c = 0; c < channels; ++c) {
              for (int k = 0; k < l.kernel; ++k) {
                const int8_t w = l.weights[static_cast<size_t>((o * channels + c) * l.kernel + k)];
                acc += x[static_cast<size_t>(c * length + t * l.stride + k)] * w;
              }
            }
            y[static_cast<size_t>(o * out_len + t)] = acc * l.weight_scale;
          }
        }
        x = std::move(y);
        channels = l.out_channels;
        length = out_len;
        break;
      }
      case LayerKind::kRelu:
        for (double &v : x) v = std::max(v, 0.0);
        break;
      case LayerKind::kMaxPool1d: {
        const int out_len = (length - l.kernel) / l.stride + 1;
        std::vector<double> y(static_cast<size_t>(channels) * out_len);
        for (int c = 0; c < channels; ++c) {
          for (int t = 0; t < out_len; ++t) {
            double best = x[static_cast<size_t>(c * length + t * l.stride)];
            for (int k = 1; k < l.kernel; ++k) {
              best = std::max(best, x[static_cast<size_t>(c * length + t * l.stride + k)]);
            }
            y[static_cast<size_t>(c * out_len + t)] = best;
          }
        }
        x = std::move(y);
        length = out_len;
        break;
      }
      case LayerKind::kFullyConnected: {
        std::vector<double> y(static_cast<size_t>(l.out_channels), 0.0);
        for (int o = 0; o < l.out_channels; ++o) {
          double acc = 0.0;
          for (int j = 0; j < l.in_channels; ++j) {
            acc += x[static_cast<size_t>(j)] * l.weights[static_cast<size_t>(o * l.in_channels + j)];
          }
          y[static_cast<size_t>(o)] = acc * l.weight_scale;
        }
        x = std::move(y);
        channels = l.out_channels;
        length = 1;
        break;
      }
    }
  }
  return x;
}

QuantResult infer_quant(const QModel &model, const QTensor &input) {
  if (input.channels != 1 || input.length != model.input_len ||
      input.data.size() != static_cast<size_t>(input.length)) {
    throw DataError("input tensor shape does not match model input");
  }
  int channels = 1;
  int length = input.length;
  int32_t zp = input.qparams.zero_point;
  std::vector<int8_t> x = input.data;

  for (const auto &l : model.layers) {
    switch (l.kind) {
      case LayerKind::kConv1d: {
        const int out_len = (length - l.kernel) / l.stride + 1;
        const int32_t z_out = l.output_qparams.zero_point;
        std::vector<int8_t> y(static_cast<size_t>(l.out_channels) * out_len);
        for (int o = 0; o < l.out_channels; ++o) {
          const int8_t *w_o = l.weights.data() + static_cast<size_t>(o * channels * l.kernel);
          for (int t = 0; t < out_len; ++t) {
            int32_t acc = 0;
            for (int c = 0; c < channels; ++c) {
              const int8_t *src = x.data() + static_cast<size_t>(c * length + t * l.stride);
              const int8_t *w = w_o + static_cast<size_t>(c * l.kernel);
              for (int k = 0; k < l.kernel; ++k) acc += (src[k] - zp) * w[k];
            }
            y[static_cast<size_t>(o * out_len + t)] = requantize(acc, l.requant, z_out);
          }
        }
        x = std::move(y);
        channels = l.out_channels;
        length = out_len;
        zp = z_out;
        break;
      }
      case LayerKind::kRelu:
        for (int8_t &v : x) v = static_cast<int8_t>(std::max<int32_t>(v, zp));
        break;
      case LayerKind::kMaxPool1d: {
        const int out_len = (length - l.kernel) / l.stride + 1;
        std::vector<int8_t> y(static_cast<size_t>(channels) * out_len);
        for (int c = 0; c < channels; ++c) {
          for (int t = 0; t < out_len; ++t) {
            const int8_t *src = x.data() + static_cast<size_t>(c * length + t * l.stride);
            y[static_cast<size_t>(c * out_len + t)] = *std::max_element(src, src + l.kernel);
          }
        }
        x = std::move(y);
        length = out_len;
        break;
      }
      case LayerKind::kFullyConnected: {
        const int32_t z_out = l.output_qparams.zero_point;
        std::vector<int8_t> y(static_cast<size_t>(l.out_channels));
        for (int o = 0; o < l.out_channels; ++o) {
          const int8_t *w = l.weights.data() + static_cast<size_t>(o * l.in_channels);
          int32_t acc = 0;
          for (int j = 0; j < l.in_channels; ++j) acc += (x[static_cast<size_t>(j)] - zp) * w[j];
          y[static_cast<size_t>(o)] = requantize(acc, l.requant, z_out);
        }
        x = std::move(y);
        channels = l.out_channels;
        length = 1;
        zp = z_out;
        break;
      }
    }
  }
  QuantResult r;
  r.predicted = argmax(std::span<const int8_t>(x));
  r.outputs = std::move(x);
  return r;
}

std::vector<int> default_augment_offsets() {
  std::vector<int> offsets;
  for (int k = -16; k <= 16; ++k) offsets.push_back(3 * k);
  return offsets;
}

std::vector<std::vector<int16_t>> augment(const EcgTrace &trace, int64_t center,
                                          std::span<const int> offsets, int length) {
  if (offsets.empty()) throw DataError("augment needs at least one offset");
  std::vector<std::vector<int16_t>> frames;
  frames.reserve(offsets.size());
  for (int off : offsets) frames.push_back(extract_frame(trace, center + off, length));
  return frames;
}

}  // namespace ecgnode
