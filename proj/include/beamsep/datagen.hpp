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

// Two-beam scene synthesis: additive and convolutive mixing of target speech
// and noise, the moving-talker gain law, and analysis-window segmentation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/room.hpp"

namespace beamsep {

enum class Condition { kNoReverb, kRirMatched, kRirMulticondition, kTimeVaryingSnr };

inline const char* ConditionName(Condition c) {
  switch (c) {
    case Condition::kNoReverb:
      return "NoReverb";
    case Condition::kRirMatched:
      return "RirMatched";
    case Condition::kRirMulticondition:
      return "RirMulticondition";
    case Condition::kTimeVaryingSnr:
      return "TimeVaryingSnr";
  }
  return "?";
}

// Accepts the canonical names case-insensitively, with or without dashes.
inline Condition ParseCondition(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(c)));
  }
  if (key == "noreverb") return Condition::kNoReverb;
  if (key == "rirmatched") return Condition::kRirMatched;
  if (key == "rirmulticondition") return Condition::kRirMulticondition;
  if (key == "timevaryingsnr") return Condition::kTimeVaryingSnr;
  throw Error("unknown condition '" + name + "'");
}

inline bool IsReverberant(Condition c) {
  return c == Condition::kRirMatched || c == Condition::kRirMulticondition;
}

struct MixSpec {
  double snr_b0 = 0.0;          // dB
  double snr_offset_b1 = -3.0;  // dB, relative to snr_b0
  uint64_t seed = 0;
  Condition condition = Condition::kNoReverb;

  double snr_b1() const { return snr_b0 + snr_offset_b1; }
};

inline MixSpec DrawMixSpec(uint64_t seed, Condition condition, double snr_lo = 0.0,
                           double snr_hi = 15.0) {
  Rng rng(DeriveSeed(seed, "snr"));
  MixSpec spec;
  spec.snr_b0 = rng.Uniform(snr_lo, snr_hi);
  spec.seed = seed;
  spec.condition = condition;
  return spec;
}

struct UtterancePair {
  SampleBuffer b0;
  SampleBuffer b1;
  SampleBuffer s0_ref;
  MixSpec spec;
};

namespace internal {

inline SampleBuffer Truncated(const SampleBuffer& x, size_t n) {
  if (x.size() < n) throw Error("noise shorter than the clean utterance");
  return SampleBuffer(std::vector<double>(x.samples.begin(), x.samples.begin() + n));
}

inline SampleBuffer Sum(const SampleBuffer& a, const SampleBuffer& b) {
  SampleBuffer out = a;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) out.samples[i] += b.samples[i];
  return out;
}

}  // namespace internal

// b0 = s + noise at snr_b0, b1 = s + the same noise at snr_b0 - 3 dB.
inline UtterancePair MixNoReverb(const SampleBuffer& clean, const SampleBuffer& noise,
                                 const MixSpec& spec) {
  const SampleBuffer n = internal::Truncated(noise, clean.size());
  UtterancePair pair;
  pair.b0 = internal::Sum(clean, ScaleNoiseToSnr(clean, n, spec.snr_b0));
  pair.b1 = internal::Sum(clean, ScaleNoiseToSnr(clean, n, spec.snr_b1()));
  pair.s0_ref = clean;
  pair.spec = spec;
  return pair;
}

struct ReverberantComponents {
  SampleBuffer speech0, noise0;  // look at speech: h00 * s, alpha0 * (h01 * n)
  SampleBuffer speech1, noise1;  // look at noise:  h10 * s, alpha1 * (h11 * n)
};

// Convolved, SNR-scaled components before summation, exposed so the
// achieved SNRs can be re-measured.
inline ReverberantComponents ReverberantMixComponents(const SampleBuffer& clean,
                                                      const SampleBuffer& noise,
                                                      const RirQuadruple& quad,
                                                      const MixSpec& spec) {
  const SampleBuffer n = internal::Truncated(noise, clean.size());
  ReverberantComponents c;
  c.speech0 = Convolve(clean, quad.at(0, 0));
  c.speech1 = Convolve(clean, quad.at(1, 0));
  c.noise0 = ScaleNoiseToSnr(c.speech0, Convolve(n, quad.at(0, 1)), spec.snr_b0);
  c.noise1 = ScaleNoiseToSnr(c.speech1, Convolve(n, quad.at(1, 1)), spec.snr_b1());
  return c;
}

// s0_ref is the dry utterance delayed by the speech direct-path delay and
// zero-padded to the length of b0.
inline UtterancePair MixReverberant(const SampleBuffer& clean, const SampleBuffer& noise,
                                    const RirQuadruple& quad, const MixSpec& spec) {
  const ReverberantComponents c = ReverberantMixComponents(clean, noise, quad, spec);
  UtterancePair pair;
  pair.b0 = internal::Sum(c.speech0, c.noise0);
  pair.b1 = internal::Sum(c.speech1, c.noise1);
  std::vector<double> ref(pair.b0.size(), 0.0);
  for (size_t i = 0; i < clean.size() && i + quad.speech_delay < ref.size(); ++i) {
    ref[i + quad.speech_delay] = clean.samples[i];
  }
  pair.s0_ref = SampleBuffer(std::move(ref));
  pair.spec = spec;
  return pair;
}

// Straight-line movement between start and end distance, bouncing at the
// ends, at constant speed.
struct Trajectory {
  double start_dist = 1.0;  // metres
  double end_dist = 3.0;
  double speed_kmh = 5.0;
  double ref_dist = 2.0;  // distance at which the gain is 1

  double speed_mps() const { return speed_kmh / 3.6; }

  void Validate() const {
    if (!(start_dist > 0 && end_dist > 0 && ref_dist > 0)) {
      throw Error("trajectory distances must be positive");
    }
    if (!(speed_kmh > 0)) throw Error("trajectory speed must be positive");
  }

  // Samples needed to cover one leg.
  double LegSamples(int sample_rate = kSampleRate) const {
    return std::abs(end_dist - start_dist) / speed_mps() * sample_rate;
  }

  double DistanceAt(size_t sample, int sample_rate = kSampleRate) const {
    const double leg = std::abs(end_dist - start_dist);
    if (leg == 0.0) return start_dist;
    const double travelled = speed_mps() * static_cast<double>(sample) / sample_rate;
    const double phase = std::fmod(travelled, 2 * leg);
    const double along = phase <= leg ? phase : 2 * leg - phase;
    return start_dist + (end_dist > start_dist ? along : -along);
  }
};

// Inverse-square gain (ref_dist / x(t))^2 applied per sample.
inline SampleBuffer ApplyMovingGain(const SampleBuffer& signal, const Trajectory& traj) {
  traj.Validate();
  SampleBuffer out = signal;
  for (size_t t = 0; t < out.size(); ++t) {
    const double x = traj.DistanceAt(t, signal.sample_rate);
    if (!(x > 0)) throw Error("nonpositive source distance");
    const double g = traj.ref_dist / x;
    out.samples[t] *= g * g;
  }
  return out;
}

// Additive mix with a moving talker. The noise level is calibrated against
// the unmodulated speech, i.e. the talker standing at ref_dist.
inline UtterancePair MixTimeVarying(const SampleBuffer& clean, const SampleBuffer& noise,
                                    const Trajectory& traj, const MixSpec& spec) {
  const SampleBuffer n = internal::Truncated(noise, clean.size());
  const SampleBuffer moving = ApplyMovingGain(clean, traj);
  UtterancePair pair;
  pair.b0 = internal::Sum(moving, ScaleNoiseToSnr(clean, n, spec.snr_b0));
  pair.b1 = internal::Sum(moving, ScaleNoiseToSnr(clean, n, spec.snr_b1()));
  pair.s0_ref = clean;
  pair.spec = spec;
  return pair;
}

// One network input unit: three magnitude spectrograms, 257 x W each.
struct AnalysisWindow {
  Eigen::MatrixXd b0;
  Eigen::MatrixXd b1;
  Eigen::MatrixXd target;
};

inline int NumWindows(int frames, int window_frames) {
  return (frames + window_frames - 1) / window_frames;
}

// Cuts equal-shape magnitude spectrograms into W-frame windows; the tail is
// reflect-padded over the whole utterance before cutting.
inline std::vector<AnalysisWindow> SegmentSpectrograms(const Spectrogram& b0,
                                                       const Spectrogram& b1,
                                                       const Spectrogram& target,
                                                       int window_frames) {
  if (b0.frames() != b1.frames() || b0.frames() != target.frames()) {
    throw Error("spectrogram frame counts differ");
  }
  const Eigen::MatrixXd p0 = ReflectPadFrames(b0.Magnitude(), window_frames).magnitude();
  const Eigen::MatrixXd p1 = ReflectPadFrames(b1.Magnitude(), window_frames).magnitude();
  const Eigen::MatrixXd pt = ReflectPadFrames(target.Magnitude(), window_frames).magnitude();
  std::vector<AnalysisWindow> out;
  const int count = static_cast<int>(p0.cols()) / window_frames;
  out.reserve(count);
  for (int w = 0; w < count; ++w) {
    const int first = w * window_frames;
    out.push_back({p0.middleCols(first, window_frames), p1.middleCols(first, window_frames),
                   pt.middleCols(first, window_frames)});
  }
  return out;
}

// Reference aligned to b0's length: zero-padded or truncated at the tail.
inline SampleBuffer AlignLength(const SampleBuffer& x, size_t len) {
  std::vector<double> out(len, 0.0);
  std::copy_n(x.samples.begin(), std::min(len, x.size()), out.begin());
  return SampleBuffer(std::move(out), x.sample_rate);
}

inline std::vector<AnalysisWindow> SegmentWindows(const UtterancePair& pair,
                                                  const StftConfig& cfg, int window_frames) {
  const SampleBuffer ref = AlignLength(pair.s0_ref, pair.b0.size());
  return SegmentSpectrograms(Stft(pair.b0, cfg), Stft(pair.b1, cfg), Stft(ref, cfg),
                             window_frames);
}

}  // namespace beamsep
