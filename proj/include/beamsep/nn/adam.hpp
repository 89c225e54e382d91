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

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/nn/model.hpp"

namespace beamsep::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;  // mirror the parameter list
  int64_t step = 0;
};

// One bias-corrected Adam update. `params` and `grads` must be aligned
// tensor lists (same order and sizes).
template <typename T>
void AdamStep(const std::vector<TensorRef<T>>& params, const std::vector<TensorRef<T>>& grads,
              AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error("adam: parameter/gradient lists differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size, 0.0);
      state.v.emplace_back(p.size, 0.0);
    }
  }
  if (state.m.size() != params.size()) throw Error("adam: state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size || static_cast<Eigen::Index>(state.m[t].size()) != params[t].size) {
      throw Error("adam: shape mismatch for " + params[t].name);
    }
    std::vector<double>& m = state.m[t];
    std::vector<double>& v = state.v[t];
    T* theta = params[t].data;
    const T* g = grads[t].data;
    for (Eigen::Index i = 0; i < params[t].size; ++i) {
      const double gi = static_cast<double>(g[i]);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                                cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace beamsep::nn
