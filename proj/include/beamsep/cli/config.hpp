// Copyright 2026 The beamsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Layered run configuration: built-in defaults < JSON config file < flags.
// Every tunable lives under a dotted key; unknown keys are rejected.

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/dataset.hpp"
#include "beamsep/nn/train.hpp"
#include "beamsep/synth.hpp"
#include "beamsep/wav.hpp"
#include "beamsep/wpe.hpp"

namespace beamsep::cli {

inline nlohmann::json DefaultConfig() {
  return nlohmann::json::parse(R"({
    "seed": 1,
    "threads": 1,
    "stft": {"frame_len": 400, "hop": 160, "fft_size": 512},
    "datagen": {
      "condition": "NoReverb",
      "snr_min": 0.0,
      "snr_max": 15.0,
      "splits": ["train", "dev", "test"],
      "synthetic": {"train": 100, "dev": 20, "test": 20, "min_seconds": 2.5,
                    "max_seconds": 3.5, "noise_seconds": 60.0, "babble_streams": 8}
    },
    "room": {"height": 2.5, "width": 6.0, "depth": 6.0, "absorption": 0.35, "max_order": 10},
    "scene": {"min_distance": 1.6, "max_distance": 2.4, "wall_clearance": 1.0,
              "dimension_jitter": 0.2, "angle_jitter_deg": 30.0,
              "aoi_speech_deg": 45.0, "aoi_noise_deg": -45.0},
    "trajectory": {"start_dist": 1.0, "end_dist": 3.0, "speed_kmh": 5.0, "ref_dist": 2.0},
    "train": {"learning_rate": 0.001, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8,
              "batch_size": 8, "max_epochs": 100, "window": 160, "fusion": "cbp",
              "input_mode": "both", "repeats": 1, "log_features": false,
              "bn_momentum": 0.9, "sketch_dim": 257},
    "wpe": {"enabled": false, "taps": 10, "delay": 3, "iters": 3, "floor": 1e-10},
    "beampattern": {"look_deg": 45.0, "angle_step_deg": 1.0,
                    "freqs": [250, 500, 1000, 2000, 4000, 7000]}
  })");
}

namespace internal {

inline bool SameKind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

inline void MergeInto(nlohmann::json& base, const nlohmann::json& over, const std::string& path) {
  if (!over.is_object()) throw Error("config " + (path.empty() ? "root" : path) + " must be an object");
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw Error("unknown config key '" + key + "'");
    nlohmann::json& slot = base[it.key()];
    if (slot.is_object()) {
      MergeInto(slot, it.value(), key);
    } else {
      if (!SameKind(slot, it.value())) throw Error("config key '" + key + "' has the wrong type");
      slot = it.value();
    }
  }
}

}  // namespace internal

class RunConfig {
 public:
  RunConfig() : j_(DefaultConfig()) {}

  void MergeFile(const std::filesystem::path& path) {
    const std::vector<uint8_t> bytes = ReadFileBytes(path);
    nlohmann::json over;
    try {
      over = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception&) {
      throw Error(path.string() + ": malformed JSON config");
    }
    internal::MergeInto(j_, over, "");
  }

  // Sets a dotted key (flag layer). The key must exist.
  void Set(const std::string& dotted, const nlohmann::json& value) {
    nlohmann::json over = value;
    std::string rest = dotted;
    std::vector<std::string> parts;
    for (size_t pos; (pos = rest.find('.')) != std::string::npos;) {
      parts.push_back(rest.substr(0, pos));
      rest = rest.substr(pos + 1);
    }
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) over = nlohmann::json{{*it, over}};
    internal::MergeInto(j_, over, "");
  }

  const nlohmann::json& json() const { return j_; }
  const nlohmann::json& at(const std::string& dotted) const {
    const nlohmann::json* p = &j_;
    std::string rest = dotted;
    for (size_t pos; (pos = rest.find('.')) != std::string::npos;) {
      p = &p->at(rest.substr(0, pos));
      rest = rest.substr(pos + 1);
    }
    return p->at(rest);
  }

  uint64_t seed() const { return at("seed").get<uint64_t>(); }

  StftConfig stft() const {
    StftConfig c;
    c.frame_len = at("stft.frame_len");
    c.hop = at("stft.hop");
    c.fft_size = at("stft.fft_size");
    c.Validate();
    return c;
  }

  DatagenOptions datagen() const {
    DatagenOptions o;
    o.snr_min = at("datagen.snr_min");
    o.snr_max = at("datagen.snr_max");
    if (!(o.snr_min <= o.snr_max)) throw Error("datagen.snr_min must not exceed datagen.snr_max");
    o.nominal_room.height = at("room.height");
    o.nominal_room.width = at("room.width");
    o.nominal_room.depth = at("room.depth");
    o.nominal_room.absorption = at("room.absorption");
    o.nominal_room.max_order = at("room.max_order");
    o.nominal_room.Validate();
    const double deg = kPi / 180.0;
    o.constraints.min_distance = at("scene.min_distance");
    o.constraints.max_distance = at("scene.max_distance");
    o.constraints.wall_clearance = at("scene.wall_clearance");
    o.constraints.dimension_jitter = at("scene.dimension_jitter");
    o.constraints.angle_jitter = at("scene.angle_jitter_deg").get<double>() * deg;
    o.constraints.nominal_aoi_speech = at("scene.aoi_speech_deg").get<double>() * deg;
    o.constraints.nominal_aoi_noise = at("scene.aoi_noise_deg").get<double>() * deg;
    o.trajectory.start_dist = at("trajectory.start_dist");
    o.trajectory.end_dist = at("trajectory.end_dist");
    o.trajectory.speed_kmh = at("trajectory.speed_kmh");
    o.trajectory.ref_dist = at("trajectory.ref_dist");
    o.trajectory.Validate();
    return o;
  }

  SyntheticCorpusSpec synthetic() const {
    SyntheticCorpusSpec s;
    s.train = at("datagen.synthetic.train");
    s.dev = at("datagen.synthetic.dev");
    s.test = at("datagen.synthetic.test");
    s.min_seconds = at("datagen.synthetic.min_seconds");
    s.max_seconds = at("datagen.synthetic.max_seconds");
    s.noise_seconds = at("datagen.synthetic.noise_seconds");
    s.babble_streams = at("datagen.synthetic.babble_streams");
    return s;
  }

  nn::TrainConfig train() const {
    nn::TrainConfig t;
    t.adam.learning_rate = at("train.learning_rate");
    t.adam.beta1 = at("train.beta1");
    t.adam.beta2 = at("train.beta2");
    t.adam.epsilon = at("train.epsilon");
    t.batch_size = at("train.batch_size");
    t.max_epochs = at("train.max_epochs");
    t.seed = seed();
    t.window_frames = at("train.window");
    t.fusion = nn::ParseFusion(at("train.fusion"));
    t.input = nn::ParseInputMode(at("train.input_mode"));
    t.log_features = at("train.log_features");
    t.bn_momentum = at("train.bn_momentum");
    t.sketch_dim = at("train.sketch_dim");
    t.Validate();
    return t;
  }

  int repeats() const {
    const int r = at("train.repeats");
    if (r < 1) throw Error("train.repeats must be >= 1");
    return r;
  }

  std::optional<WpeConfig> wpe() const {
    if (!at("wpe.enabled").get<bool>()) return std::nullopt;
    WpeConfig w;
    w.taps = at("wpe.taps");
    w.delay = at("wpe.delay");
    w.iterations = at("wpe.iters");
    w.floor = at("wpe.floor");
    w.Validate();
    return w;
  }

  // The effective configuration, sufficient to reproduce the run.
  std::string Lock() const { return j_.dump(2) + "\n"; }

 private:
  nlohmann::json j_;
};

}  // namespace beamsep::cli
