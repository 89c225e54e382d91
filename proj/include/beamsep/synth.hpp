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

// Stand-in speech corpus: formant-filtered noise with syllabic amplitude
// modulation, and babble made of several such streams.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/wav.hpp"

namespace beamsep {

namespace internal {

struct Biquad {
  double b0 = 0, b2 = 0, a1 = 0, a2 = 0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  // Constant 0 dB peak-gain band-pass around `freq` with bandwidth `bw`.
  void SetBandPass(double freq, double bw, double fs) {
    const double w0 = 2 * kPi * freq / fs;
    const double alpha = std::sin(w0) * bw / (2 * freq);
    const double a0 = 1 + alpha;
    b0 = alpha / a0;
    b2 = -alpha / a0;
    a1 = -2 * std::cos(w0) / a0;
    a2 = (1 - alpha) / a0;
  }

  double Process(double x) {
    const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline void NormalizeRms(std::vector<double>& x, double rms) {
  const double p = MeanPower(x, x.size());
  if (p <= 0) return;
  const double g = rms / std::sqrt(p);
  for (double& v : x) v *= g;
}

}  // namespace internal

struct SynthOptions {
  double rms = 0.05;
  double min_syllable = 0.12;  // seconds
  double max_syllable = 0.30;
  double pause_probability = 0.15;
};

// Speech-shaped noise: each syllable gets its own three formants, a
// raised-cosine envelope and a short gap; some gaps are longer pauses.
inline SampleBuffer SynthesizeUtterance(uint64_t seed, double seconds,
                                        const SynthOptions& opt = {}) {
  Rng rng(seed);
  const size_t len = static_cast<size_t>(std::lround(seconds * kSampleRate));
  std::vector<double> out(len, 0.0);
  std::array<internal::Biquad, 3> formants;
  static constexpr std::array<double, 3> kWeights = {1.0, 0.5, 0.25};
  size_t pos = static_cast<size_t>(rng.Uniform(0.02, 0.1) * kSampleRate);
  while (pos < len) {
    const bool fricative = rng.Uniform() < 0.12;
    const std::array<double, 3> freqs =
        fricative ? std::array<double, 3>{rng.Uniform(2500, 3500), rng.Uniform(4000, 5500),
                                          rng.Uniform(5800, 7200)}
                  : std::array<double, 3>{rng.Uniform(300, 900), rng.Uniform(900, 2400),
                                          rng.Uniform(2400, 3400)};
    const std::array<double, 3> widths = {rng.Uniform(60, 140), rng.Uniform(90, 200),
                                          rng.Uniform(150, 300)};
    for (int k = 0; k < 3; ++k) formants[k].SetBandPass(freqs[k], widths[k], kSampleRate);
    const size_t syl = static_cast<size_t>(
        rng.Uniform(opt.min_syllable, opt.max_syllable) * kSampleRate);
    const double level = rng.Uniform(0.5, 1.0) * (fricative ? 0.4 : 1.0);
    for (size_t i = 0; i < syl && pos + i < len; ++i) {
      const double env = 0.5 - 0.5 * std::cos(2 * kPi * (i + 0.5) / syl);
      const double e = rng.Normal();
      double y = 0;
      for (int k = 0; k < 3; ++k) y += kWeights[k] * formants[k].Process(e);
      out[pos + i] = level * env * y;
    }
    pos += syl;
    const double gap = rng.Uniform() < opt.pause_probability ? rng.Uniform(0.2, 0.45)
                                                             : rng.Uniform(0.02, 0.12);
    pos += static_cast<size_t>(gap * kSampleRate);
  }
  internal::NormalizeRms(out, opt.rms);
  return SampleBuffer(std::move(out));
}

// Sum of `streams` independent speech-shaped streams.
inline SampleBuffer SynthesizeBabble(uint64_t seed, double seconds, int streams = 8,
                                     double rms = 0.05) {
  const size_t len = static_cast<size_t>(std::lround(seconds * kSampleRate));
  std::vector<double> acc(len, 0.0);
  for (int s = 0; s < streams; ++s) {
    SampleBuffer one = SynthesizeUtterance(DeriveSeed(seed, static_cast<uint64_t>(s)), seconds);
    for (size_t i = 0; i < len; ++i) acc[i] += one.samples[i];
  }
  internal::NormalizeRms(acc, rms);
  return SampleBuffer(std::move(acc));
}

struct SyntheticCorpusSpec {
  int train = 100;
  int dev = 20;
  int test = 20;
  double min_seconds = 2.5;
  double max_seconds = 3.5;
  double noise_seconds = 60.0;
  int babble_streams = 8;
};

// Writes <dir>/{train,dev,test}/uttNNNN.wav and <dir>/noise.wav.
inline void WriteSyntheticCorpus(const std::filesystem::path& dir, uint64_t seed,
                                 const SyntheticCorpusSpec& spec) {
  namespace fs = std::filesystem;
  const std::array<std::pair<const char*, int>, 3> splits = {
      {{"train", spec.train}, {"dev", spec.dev}, {"test", spec.test}}};
  for (const auto& [name, count] : splits) {
    fs::create_directories(dir / name);
    Rng rng(DeriveSeed(seed, std::string("corpus/") + name));
    for (int i = 0; i < count; ++i) {
      const double seconds = rng.Uniform(spec.min_seconds, spec.max_seconds);
      const uint64_t utt_seed = rng.UniformInt(UINT64_MAX);
      char file[32];
      std::snprintf(file, sizeof(file), "utt%04d.wav", i);
      WriteWavPcm16(dir / name / file, SynthesizeUtterance(utt_seed, seconds));
    }
  }
  WriteWavPcm16(dir / "noise.wav", SynthesizeBabble(DeriveSeed(seed, "babble"),
                                                     spec.noise_seconds, spec.babble_streams));
}

}  // namespace beamsep
