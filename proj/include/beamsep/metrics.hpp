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

// Signal-level quality measures.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"

namespace beamsep {

inline constexpr double kLogMseEpsilon = 1e-12;
inline constexpr double kSiSdrCapDb = 60.0;
inline constexpr double kSegSnrMinDb = -10.0;
inline constexpr double kSegSnrMaxDb = 35.0;

// mean((log(1 + est) - log(1 + ref))^2), linear domain.
inline double SpectralLogMseLinear(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
  if (est.rows() != ref.rows() || est.cols() != ref.cols() || est.size() == 0) {
    throw Error("spectral log-mse: shape mismatch");
  }
  return (est.array().log1p() - ref.array().log1p()).square().mean();
}

inline double SpectralLogMse(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
  return 10.0 * std::log10(SpectralLogMseLinear(est, ref) + kLogMseEpsilon);
}

// Scale-invariant SDR, capped at 60 dB.
inline double SiSdr(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw Error("si-sdr: length mismatch");
  double ss = 0, es = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    ss += ref[i] * ref[i];
    es += est[i] * ref[i];
  }
  if (ss == 0.0) throw Error("si-sdr: zero reference");
  const double alpha = es / ss;
  double target = 0, residual = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double t = alpha * ref[i];
    target += t * t;
    residual += (t - est[i]) * (t - est[i]);
  }
  if (residual <= 0.0) return kSiSdrCapDb;
  if (target <= 0.0) return -kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
}

inline double SiSdr(const SampleBuffer& est, const SampleBuffer& ref) {
  return SiSdr(std::span<const double>(est.samples), std::span<const double>(ref.samples));
}

// Mean over non-overlapping segments (30 ms by default; a trailing partial
// segment counts) of the per-segment SNR clamped to [-10, 35] dB. Segments
// where the reference is silent are skipped.
inline double SegmentalSnr(std::span<const double> est, std::span<const double> ref,
                           int seg_len = kSampleRate * 3 / 100) {
  if (est.size() != ref.size()) throw Error("segmental snr: length mismatch");
  if (seg_len < 1) throw Error("segmental snr: segment length must be positive");
  double sum = 0;
  int used = 0;
  for (size_t start = 0; start < ref.size(); start += seg_len) {
    const size_t end = std::min(ref.size(), start + seg_len);
    double ps = 0, pe = 0;
    for (size_t i = start; i < end; ++i) {
      ps += ref[i] * ref[i];
      pe += (ref[i] - est[i]) * (ref[i] - est[i]);
    }
    if (ps == 0.0) continue;
    const double snr = pe == 0.0 ? kSegSnrMaxDb : 10.0 * std::log10(ps / pe);
    sum += std::clamp(snr, kSegSnrMinDb, kSegSnrMaxDb);
    ++used;
  }
  if (used == 0) throw Error("segmental snr: reference is silent");
  return sum / used;
}

inline double SegmentalSnr(const SampleBuffer& est, const SampleBuffer& ref) {
  return SegmentalSnr(std::span<const double>(est.samples), std::span<const double>(ref.samples));
}

}  // namespace beamsep
