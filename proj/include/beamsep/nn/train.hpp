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

// Mini-batch training with Adam and best-on-dev checkpointing.

#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/features.hpp"
#include "beamsep/nn/adam.hpp"
#include "beamsep/nn/model.hpp"

namespace beamsep::nn {

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 8;
  int max_epochs = 100;
  uint64_t seed = 1;
  int window_frames = 160;
  FusionMode fusion = FusionMode::kCbp;
  InputMode input = InputMode::kBoth;
  bool log_features = false;
  double bn_momentum = 0.9;
  int sketch_dim = 257;

  void Validate() const {
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (max_epochs < 0) throw Error("max_epochs must be >= 0");
    if (!(adam.learning_rate > 0)) throw Error("learning_rate must be positive");
    if (window_frames != 160 && window_frames != 320 && window_frames != 640) {
      throw Error("window must be 160, 320 or 640");
    }
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double dev_loss = 0;
  double seconds = 0;
};

struct TrainResult {
  TcnModel<float> model;  // best-on-dev checkpoint
  std::vector<EpochRecord> history;
  double initial_dev_loss = 0;
  int best_epoch = 0;  // 0: the initial model was never beaten
  double best_dev_loss = 0;
};

// Applies log1p to the target when the model works in the log domain.
inline Batch<float> ModelTargets(const Architecture& a, const Batch<float>& target) {
  if (!a.log_features) return target;
  Batch<float> out;
  for (const auto& t : target) out.push_back(t.array().max(0.0f).log1p().matrix());
  return out;
}

// Inference-mode MSE over a window set, evaluated in chunks.
inline double EvaluateLoss(TcnModel<float>& m, const WindowSet& set, int chunk = 8) {
  if (set.size() == 0) throw Error("empty dataset");
  double sum = 0;
  double count = 0;
  for (size_t first = 0; first < set.size(); first += chunk) {
    const size_t last = std::min(set.size(), first + chunk);
    const Batch<float> b0(set.b0.begin() + first, set.b0.begin() + last);
    const Batch<float> b1(set.b1.begin() + first, set.b1.begin() + last);
    const Batch<float> t =
        ModelTargets(m.arch, Batch<float>(set.target.begin() + first, set.target.begin() + last));
    const Batch<float> y = Forward(m, b0, b1, ForwardOptions{});
    double n = 0;
    for (const auto& x : y) n += static_cast<double>(x.size());
    sum += MseLoss(y, t) * n;
    count += n;
  }
  return sum / count;
}

inline Architecture ArchitectureFor(const TrainConfig& cfg, int channels) {
  Architecture a;
  a.channels = channels;
  a.sketch_dim = cfg.sketch_dim;
  a.fusion = cfg.fusion;
  a.input = cfg.input;
  a.log_features = cfg.log_features;
  return a;
}

using EpochCallback = std::function<void(const EpochRecord&)>;

inline TrainResult Train(const WindowSet& train, const WindowSet& dev, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.Validate();
  if (train.size() == 0 || dev.size() == 0) throw Error("empty dataset");
  const int channels = static_cast<int>(train.b0.front().rows());
  TrainResult result;
  TcnModel<float> model = InitModel<float>(ArchitectureFor(cfg, channels), cfg.seed);
  result.initial_dev_loss = EvaluateLoss(model, dev);
  result.best_dev_loss = result.initial_dev_loss;
  result.model = model;

  AdamState adam;
  const auto params = Parameters(model);
  std::vector<size_t> order(train.size());
  const ForwardOptions fo{true, cfg.bn_momentum, true};
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(DeriveSeed(DeriveSeed(cfg.seed, "shuffle"), static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.UniformInt(i)]);

    double loss_sum = 0;
    int batches = 0;
    for (size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const size_t last = std::min(order.size(), first + static_cast<size_t>(cfg.batch_size));
      Batch<float> b0, b1, t;
      for (size_t i = first; i < last; ++i) {
        b0.push_back(train.b0[order[i]]);
        b1.push_back(train.b1[order[i]]);
        t.push_back(train.target[order[i]]);
      }
      t = ModelTargets(model.arch, t);
      ModelCache<float> cache;
      const Batch<float> y = Forward(model, b0, b1, fo, &cache);
      loss_sum += MseLoss(y, t);
      ++batches;
      TcnModel<float> grad = ZeroModel<float>(model.arch);
      Backward(model, cache, MseGradient(y, t), grad);
      AdamStep(params, Parameters(grad), adam, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / batches;
    rec.dev_loss = EvaluateLoss(model, dev);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (rec.dev_loss < result.best_dev_loss) {
      result.best_dev_loss = rec.dev_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace beamsep::nn
