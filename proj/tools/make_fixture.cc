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

// Writes a weight file for tests and demos that need a model without a
// trained one. Hidden layers keep random int8 weights; the readout is fitted
// to the generator's morphology clusters so predictions have realistic margins. Scales
// come from MinMax calibration.

#include <cstdlib>
#include <iostream>
#include <random>
#include <span>

#include "CLI11.hpp"
#include "ecgnode/qcnn.h"
#include "support/generators.h"

int main(int argc, char **argv) {
  CLI::App app{"Generate a random, calibrated CNN weight file"};
  std::string labels = "NLRAV", out;
  int c1 = 4, c2 = 4, fc1 = 100, calib_frames = 400, fit_frames = 3000, restarts = 8;
  uint64_t seed = 1;
  bool normal_only = false;
  app.add_option("--labels", labels, "NLRAV or NSVFQ");
  app.add_option("--c1", c1);
  app.add_option("--c2", c2);
  app.add_option("--fc1", fc1);
  app.add_option("--seed", seed);
  app.add_option("--calibration-frames", calib_frames);
  app.add_option("--fit-frames", fit_frames, "frames used to fit the readout layer");
  app.add_option("--restarts", restarts, "random hidden layers to try");
  app.add_flag("--normal-only", normal_only,
               "make the last layer favour class 0 for every input");
  app.add_option("-o,--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    std::mt19937_64 rng(seed);
    const auto &set = ecgnode::LabelSet::by_name(labels);

    std::vector<std::vector<int16_t>> fit_set;
    std::vector<int> classes;
    for (int i = 0; i < fit_frames; ++i) {
      ecgnode::testing::BeatShape shape{};
      fit_set.push_back(ecgnode::testing::random_beat_frame(rng, ecgnode::kFrameLength, &shape));
      classes.push_back(shape.cls);
    }

    // Random-feature selection: fit the readout on several random hidden
    // layers and keep the best float training accuracy.
    ecgnode::QModel best;
    int best_hits = -1;
    for (int r = 0; r < restarts; ++r) {
      ecgnode::QModel m = ecgnode::testing::random_reference_model(rng, set.id, c1, c2, fc1);
      ecgnode::testing::calibrate(m, fit_set);
      ecgnode::testing::fit_readout(m, fit_set, classes);
      int hits = 0;
      for (size_t i = 0; i < fit_set.size(); ++i) {
        const auto logits = ecgnode::infer_float(m, fit_set[i]);
        hits += ecgnode::argmax(std::span<const double>(logits)) == classes[i];
      }
      if (hits > best_hits) {
        best_hits = hits;
        best = std::move(m);
      }
    }
    std::cerr << "make_fixture: training accuracy "
              << static_cast<double>(best_hits) / static_cast<double>(fit_set.size()) << "\n";

    if (normal_only) {
      auto &last = best.layers.back();
      for (int o = 0; o < last.out_channels; ++o) {
        for (int j = 0; j < last.in_channels; ++j) {
          auto &w = last.weights[static_cast<size_t>(o * last.in_channels + j)];
          const int mag = std::max(1, std::abs(static_cast<int>(w)));
          w = static_cast<int8_t>(o == 0 ? mag : -mag);
        }
      }
    }
    std::vector<std::vector<int16_t>> frames;
    for (int i = 0; i < calib_frames; ++i) frames.push_back(ecgnode::testing::random_beat_frame(rng));
    ecgnode::testing::calibrate(best, frames);
    ecgnode::save_model(best, out);
  } catch (const std::exception &e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
