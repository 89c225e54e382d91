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

// Single-channel weighted prediction error dereverberation.
//
// Each STFT bin is treated as a delayed autoregressive process: the late tail
// at frame f is predicted from frames f-D .. f-D-K+1 and subtracted. The
// prediction filter is the least-squares solution weighted by the inverse of
// the current estimate's power, re-estimated a few times.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <utility>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"

namespace beamsep {

struct WpeConfig {
  int taps = 10;   // K
  int delay = 3;   // D, frames
  int iterations = 3;
  double floor = 1e-10;  // lower bound on the per-frame power estimate

  void Validate() const {
    if (taps < 1) throw Error("wpe taps must be >= 1");
    if (delay < 1) throw Error("wpe delay must be >= 1");
    if (iterations < 1) throw Error("wpe iterations must be >= 1");
    if (!(floor > 0)) throw Error("wpe floor must be positive");
  }
};

// Dereverberates one bin trajectory.
inline Eigen::VectorXcd WpeBin(const Eigen::VectorXcd& x, const WpeConfig& cfg) {
  using Cd = std::complex<double>;
  const int frames = static_cast<int>(x.size());
  const int k = cfg.taps;
  // Row f holds x[f-D], x[f-D-1], ..., x[f-D-K+1] (zero before the start).
  Eigen::MatrixXcd delayed = Eigen::MatrixXcd::Zero(frames, k);
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < k; ++j) {
      const int src = f - cfg.delay - j;
      if (src >= 0) delayed(f, j) = x(src);
    }
  }
  Eigen::VectorXcd d = x;
  for (int it = 0; it < cfg.iterations; ++it) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(k, k);
    Eigen::VectorXcd p = Eigen::VectorXcd::Zero(k);
    for (int f = 0; f < frames; ++f) {
      const double inv = 1.0 / std::max(std::norm(d(f)), cfg.floor);
      const auto row = delayed.row(f);
      r.noalias() += inv * row.adjoint() * row;
      p.noalias() += inv * row.adjoint() * x(f);
    }
    if (p.squaredNorm() == 0.0) {
      d = x;  // nothing predictable
      continue;
    }
    const double load = 1e-8 * r.trace().real() / k;
    r.diagonal().array() += Cd(load, 0.0);
    // h is the conjugate of the prediction filter g: d = x - g^H x_delayed.
    const Eigen::VectorXcd h = r.ldlt().solve(p);
    d = x - delayed * h;
  }
  return d;
}

inline Spectrogram WpeSingle(const Spectrogram& spec, const WpeConfig& cfg = {}) {
  cfg.Validate();
  const Eigen::MatrixXcd& x = spec.complex();
  if (x.cols() <= cfg.delay + cfg.taps) {
    throw Error("wpe needs more than delay + taps frames");
  }
  Eigen::MatrixXcd out(x.rows(), x.cols());
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    out.row(b) = WpeBin(x.row(b).transpose(), cfg).transpose();
  }
  return Spectrogram::FromComplex(std::move(out));
}

inline std::pair<Spectrogram, Spectrogram> WpePair(const Spectrogram& b0, const Spectrogram& b1,
                                                   const WpeConfig& cfg = {}) {
  return {WpeSingle(b0, cfg), WpeSingle(b1, cfg)};
}

}  // namespace beamsep
