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

// Utterance enhancement: beam spectra -> windowed magnitude estimation ->
// concatenation -> b0 phase -> inverse STFT.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>

#include "beamsep/datagen.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/features.hpp"
#include "beamsep/nn/model.hpp"
#include "beamsep/wpe.hpp"

namespace beamsep {

// Maps one (B0, B1) magnitude window pair to the target magnitude estimate.
using WindowEstimator =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& b0, const Eigen::MatrixXd& b1)>;

inline WindowEstimator ModelEstimator(nn::TcnModel<float>& model) {
  return [&model](const Eigen::MatrixXd& b0, const Eigen::MatrixXd& b1) {
    const nn::Matrix<float> y = nn::Infer(model, nn::Matrix<float>(b0.cast<float>()),
                                          nn::Matrix<float>(b1.cast<float>()));
    Eigen::MatrixXd out = y.cast<double>();
    if (model.arch.log_features) out = out.array().expm1().matrix();
    return out;
  };
}

// Passes B0 through unchanged; enhancing with it reproduces the input.
inline WindowEstimator IdentityEstimator() {
  return [](const Eigen::MatrixXd& b0, const Eigen::MatrixXd&) { return b0; };
}

struct EnhanceOptions {
  StftConfig stft;
  int window_frames = 160;
  std::optional<WpeConfig> wpe;
};

// Magnitude estimate for a whole utterance, 257 x frames, clamped at zero.
inline Eigen::MatrixXd EstimateMagnitude(const BeamSpectra& s, const WindowEstimator& est,
                                         int window_frames) {
  const int frames = s.b0.frames();
  const Eigen::MatrixXd p0 = ReflectPadFrames(s.b0.Magnitude(), window_frames).magnitude();
  const Eigen::MatrixXd p1 = ReflectPadFrames(s.b1.Magnitude(), window_frames).magnitude();
  Eigen::MatrixXd out(p0.rows(), p0.cols());
  for (Eigen::Index first = 0; first < p0.cols(); first += window_frames) {
    const Eigen::MatrixXd y =
        est(p0.middleCols(first, window_frames), p1.middleCols(first, window_frames));
    if (y.rows() != p0.rows() || y.cols() != window_frames) {
      throw Error("estimator returned a window of the wrong shape");
    }
    out.middleCols(first, window_frames) = y;
  }
  return out.leftCols(frames).cwiseMax(0.0);
}

// Attaches the phase of `phase_source` to `magnitude`.
inline Spectrogram WithPhase(const Eigen::MatrixXd& magnitude, const Spectrogram& phase_source) {
  const Eigen::MatrixXcd& z = phase_source.complex();
  if (z.rows() != magnitude.rows() || z.cols() != magnitude.cols()) {
    throw Error("phase source shape mismatch");
  }
  Eigen::MatrixXcd out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double a = std::abs(z(i, j));
      out(i, j) = a > 0.0 ? magnitude(i, j) * (z(i, j) / a) : std::complex<double>(magnitude(i, j), 0.0);
    }
  }
  return Spectrogram::FromComplex(std::move(out));
}

// Output has exactly the length of b0. The phase comes from the network's
// B0 input spectrum (after WPE when enabled).
inline SampleBuffer Enhance(const SampleBuffer& b0, const SampleBuffer& b1, const WindowEstimator& est,
                            const EnhanceOptions& opt) {
  const BeamSpectra s = ComputeBeamSpectra(b0, b1, opt.stft, opt.wpe);
  const Eigen::MatrixXd mag = EstimateMagnitude(s, est, opt.window_frames);
  return PaddedIstft(WithPhase(mag, s.b0), opt.stft, b0.size());
}

}  // namespace beamsep
