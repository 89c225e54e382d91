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

// Waveform and time-frequency primitives shared by the whole pipeline.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/fft.hpp"

namespace beamsep {

// Mono waveform. Samples are kept in double precision inside the DSP code.
struct SampleBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  SampleBuffer() = default;
  explicit SampleBuffer(std::vector<double> s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct ImpulseResponse {
  std::vector<double> taps;
  int sample_rate = kSampleRate;
};

inline void CheckFinite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(std::string(what) + ": non-finite sample");
  }
}

enum class WindowKind { kHann };

// 25 ms frames, 10 ms hop (15 ms overlap), 512-point DFT -> 257 bins.
struct StftConfig {
  int frame_len = 400;
  int hop = 160;
  int fft_size = 512;
  WindowKind window = WindowKind::kHann;

  int bins() const { return fft_size / 2 + 1; }
  int overlap() const { return frame_len - hop; }

  void Validate() const {
    if (bins() != 257) throw Error("stft config must yield 257 bins");
    if (overlap() != 240) throw Error("stft config must overlap 240 samples");
    if (frame_len > fft_size) throw Error("frame longer than fft size");
  }

  // 1 + floor((len - frame_len) / hop) for len >= frame_len, else 0.
  int NumFrames(size_t len) const {
    if (len < static_cast<size_t>(frame_len)) return 0;
    return 1 + static_cast<int>((len - frame_len) / hop);
  }
};

// Periodic Hann window.
inline std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

inline std::vector<double> WindowFunction(const StftConfig& cfg) {
  switch (cfg.window) {
    case WindowKind::kHann:
      return HannWindow(cfg.frame_len);
  }
  throw Error("unknown window");
}

enum class SpectrogramKind { kComplex, kMagnitude };

// bins x frames time-frequency matrix; one column per frame.
class Spectrogram {
 public:
  Spectrogram() = default;

  static Spectrogram FromComplex(Eigen::MatrixXcd values) {
    Spectrogram s;
    s.kind_ = SpectrogramKind::kComplex;
    s.complex_ = std::move(values);
    return s;
  }

  static Spectrogram FromMagnitude(Eigen::MatrixXd values) {
    if ((values.array() < 0.0).any()) {
      throw Error("magnitude spectrogram has negative entries");
    }
    Spectrogram s;
    s.kind_ = SpectrogramKind::kMagnitude;
    s.magnitude_ = std::move(values);
    return s;
  }

  SpectrogramKind kind() const { return kind_; }
  bool is_complex() const { return kind_ == SpectrogramKind::kComplex; }

  int bins() const {
    return static_cast<int>(is_complex() ? complex_.rows() : magnitude_.rows());
  }
  int frames() const {
    return static_cast<int>(is_complex() ? complex_.cols() : magnitude_.cols());
  }

  const Eigen::MatrixXcd& complex() const {
    if (!is_complex()) throw Error("phase required");
    return complex_;
  }
  const Eigen::MatrixXd& magnitude() const {
    if (is_complex()) throw Error("magnitude spectrogram expected");
    return magnitude_;
  }

  Spectrogram Magnitude() const {
    if (!is_complex()) return *this;
    return FromMagnitude(complex_.cwiseAbs());
  }

  // Copies `count` frames starting at `first`.
  Spectrogram Frames(int first, int count) const {
    if (is_complex()) return FromComplex(complex_.middleCols(first, count));
    Spectrogram s;
    s.kind_ = SpectrogramKind::kMagnitude;
    s.magnitude_ = magnitude_.middleCols(first, count);
    return s;
  }

 private:
  SpectrogramKind kind_ = SpectrogramKind::kMagnitude;
  Eigen::MatrixXcd complex_;
  Eigen::MatrixXd magnitude_;
};

inline Spectrogram Stft(const SampleBuffer& signal, const StftConfig& cfg) {
  cfg.Validate();
  const int frames = cfg.NumFrames(signal.size());
  if (frames < 1) throw Error("signal too short");
  const std::vector<double> window = WindowFunction(cfg);
  const RealFft fft(cfg.fft_size);
  Eigen::MatrixXcd out(cfg.bins(), frames);
  std::vector<double> frame(cfg.fft_size, 0.0);
  std::vector<std::complex<double>> spec(cfg.bins());
  for (int f = 0; f < frames; ++f) {
    const double* x = signal.samples.data() + static_cast<size_t>(f) * cfg.hop;
    for (int n = 0; n < cfg.frame_len; ++n) frame[n] = window[n] * x[n];
    fft.Forward(frame, spec);
    for (int b = 0; b < cfg.bins(); ++b) out(b, f) = spec[b];
  }
  return Spectrogram::FromComplex(std::move(out));
}

// Weighted overlap-add with the analysis window reused for synthesis. The
// 400/160 framing is not constant-overlap-add, so every output sample is
// divided by the summed squared window at that sample (floored at 1e-8).
inline SampleBuffer Istft(const Spectrogram& spec, const StftConfig& cfg) {
  cfg.Validate();
  const Eigen::MatrixXcd& values = spec.complex();
  if (values.rows() != cfg.bins()) throw Error("spectrogram bin count mismatch");
  const int frames = static_cast<int>(values.cols());
  if (frames < 1) throw Error("empty spectrogram");
  const std::vector<double> window = WindowFunction(cfg);
  const RealFft fft(cfg.fft_size);
  const size_t len = static_cast<size_t>(frames - 1) * cfg.hop + cfg.frame_len;
  std::vector<double> acc(len, 0.0), norm(len, 0.0);
  std::vector<std::complex<double>> column(cfg.bins());
  std::vector<double> frame(cfg.fft_size);
  for (int f = 0; f < frames; ++f) {
    for (int b = 0; b < cfg.bins(); ++b) column[b] = values(b, f);
    fft.Inverse(column, frame);
    const size_t start = static_cast<size_t>(f) * cfg.hop;
    for (int n = 0; n < cfg.frame_len; ++n) {
      acc[start + n] += window[n] * frame[n];
      norm[start + n] += window[n] * window[n];
    }
  }
  for (size_t i = 0; i < len; ++i) acc[i] /= std::max(norm[i], 1e-8);
  return SampleBuffer(std::move(acc));
}

// Analysis of a signal zero-padded by one frame on each side, so that every
// original sample lies in the well-conditioned interior of the overlap-add.
inline Spectrogram PaddedStft(const SampleBuffer& signal, const StftConfig& cfg) {
  std::vector<double> x(signal.size() + 2 * static_cast<size_t>(cfg.frame_len), 0.0);
  std::copy(signal.samples.begin(), signal.samples.end(), x.begin() + cfg.frame_len);
  return Stft(SampleBuffer(std::move(x), signal.sample_rate), cfg);
}

// Inverse of PaddedStft: drops the leading pad and returns `len` samples,
// zero-filled if the synthesis is shorter.
inline SampleBuffer PaddedIstft(const Spectrogram& spec, const StftConfig& cfg, size_t len) {
  const SampleBuffer y = Istft(spec, cfg);
  std::vector<double> out(len, 0.0);
  for (size_t i = 0; i < len && i + cfg.frame_len < y.size(); ++i) {
    out[i] = y.samples[i + cfg.frame_len];
  }
  return SampleBuffer(std::move(out), y.sample_rate);
}

namespace internal {

inline std::vector<double> DirectConvolve(std::span<const double> a,
                                          std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
  }
  return out;
}

inline std::vector<double> FftConvolve(std::span<const double> a,
                                       std::span<const double> b) {
  const size_t out_len = a.size() + b.size() - 1;
  int n = 1;
  while (static_cast<size_t>(n) < out_len) n <<= 1;
  const RealFft fft(n);
  std::vector<std::complex<double>> fa = fft.Forward(a);
  const std::vector<std::complex<double>> fb = fft.Forward(b);
  for (size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> out = fft.Inverse(fa);
  out.resize(out_len);
  return out;
}

}  // namespace internal

// Full linear convolution, len(a) + len(b) - 1 samples.
inline std::vector<double> Convolve(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("convolve: empty input");
  if (std::min(a.size(), b.size()) <= 64 || a.size() * b.size() <= (1u << 16)) {
    return internal::DirectConvolve(a, b);
  }
  return internal::FftConvolve(a, b);
}

inline SampleBuffer Convolve(const SampleBuffer& signal,
                             const ImpulseResponse& rir) {
  return SampleBuffer(Convolve(signal.samples, rir.taps), signal.sample_rate);
}

inline double MeanPower(std::span<const double> x, size_t n) {
  n = std::min(n, x.size());
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc / static_cast<double>(n);
}

// 10 log10(P_target / P_noise) over the common length of both signals.
inline double MeasureSnrDb(const SampleBuffer& target, const SampleBuffer& noise) {
  const size_t n = std::min(target.size(), noise.size());
  return PowerRatioToDb(MeanPower(target.samples, n) /
                        MeanPower(noise.samples, n));
}

// Gain alpha such that target vs. alpha * noise has the requested SNR.
inline double NoiseGainForSnr(const SampleBuffer& target,
                              const SampleBuffer& noise, double snr_db) {
  const size_t n = std::min(target.size(), noise.size());
  const double pt = MeanPower(target.samples, n);
  const double pn = MeanPower(noise.samples, n);
  if (!(pt > 0.0) || !(pn > 0.0)) throw Error("degenerate signal");
  return std::sqrt(pt / (pn * DbToPowerRatio(snr_db)));
}

inline SampleBuffer ScaleNoiseToSnr(const SampleBuffer& target,
                                    const SampleBuffer& noise, double snr_db) {
  const double alpha = NoiseGainForSnr(target, noise, snr_db);
  SampleBuffer out = noise;
  for (double& v : out.samples) v *= alpha;
  return out;
}

// Source frame for padded position p of a sequence with `frames` frames,
// mirroring about the last frame without repeating it. Positions beyond one
// reflection keep bouncing between the two ends.
inline int ReflectIndex(int p, int frames) {
  if (p < frames) return p;
  if (frames == 1) return 0;
  const int period = 2 * (frames - 1);
  const int q = p % period;
  return q < frames ? q : period - q;
}

inline Spectrogram ReflectPadFrames(const Spectrogram& spec, int window_frames) {
  if (window_frames != 160 && window_frames != 320 && window_frames != 640) {
    throw Error("window_frames must be 160, 320 or 640");
  }
  const int frames = spec.frames();
  if (frames < 1) throw Error("empty spectrogram");
  const int padded = (frames + window_frames - 1) / window_frames * window_frames;
  if (padded == frames) return spec;
  if (spec.is_complex()) {
    const Eigen::MatrixXcd& v = spec.complex();
    Eigen::MatrixXcd out(v.rows(), padded);
    for (int p = 0; p < padded; ++p) out.col(p) = v.col(ReflectIndex(p, frames));
    return Spectrogram::FromComplex(std::move(out));
  }
  const Eigen::MatrixXd& v = spec.magnitude();
  Eigen::MatrixXd out(v.rows(), padded);
  for (int p = 0; p < padded; ++p) out.col(p) = v.col(ReflectIndex(p, frames));
  return Spectrogram::FromMagnitude(std::move(out));
}

}  // namespace beamsep
