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

// Delay-and-sum beamforming for a linear array under the planar-wavefront
// model. Angles are measured from broadside, positive towards the array axis.

#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"

namespace beamsep {

// Microphone offsets of the emulated Kinect array, metres from the centre.
inline std::vector<double> KinectMicOffsets() { return {-0.113, 0.036, 0.076, 0.113}; }
inline std::vector<double> SymmetricKinectMicOffsets() {
  return {-0.113, -0.036, 0.076, 0.113};
}

struct BeamformerConfig {
  std::vector<double> mic_offsets = KinectMicOffsets();  // metres
  double speed_of_sound = kSpeedOfSound;
  double look_aoi = 0.0;  // radians

  void Validate() const {
    if (mic_offsets.empty()) throw Error("beamformer needs at least one microphone");
    for (double d : mic_offsets) {
      if (!std::isfinite(d)) throw Error("microphone offsets must be finite");
    }
    if (!(std::abs(look_aoi) <= kPi / 2 + 1e-12)) {
      throw Error("look angle outside [-pi/2, pi/2]");
    }
  }
};

struct SteeringDelays {
  std::vector<double> seconds;
  std::vector<int> samples;  // nearest-sample rounding of `seconds`
};

// tau_m = offset_m * sin(aoi) / c. A plane wave from `aoi` reaches the
// microphone at offset_m that much earlier than the array centre.
inline std::vector<double> PlaneWaveDelays(std::span<const double> offsets,
                                           double aoi, double c) {
  std::vector<double> tau(offsets.size());
  for (size_t m = 0; m < offsets.size(); ++m) tau[m] = offsets[m] * std::sin(aoi) / c;
  return tau;
}

inline SteeringDelays ComputeSteeringDelays(const BeamformerConfig& cfg,
                                            int sample_rate = kSampleRate) {
  cfg.Validate();
  SteeringDelays d;
  d.seconds = PlaneWaveDelays(cfg.mic_offsets, cfg.look_aoi, cfg.speed_of_sound);
  d.samples.reserve(d.seconds.size());
  for (double t : d.seconds) {
    d.samples.push_back(static_cast<int>(std::lround(t * sample_rate)));
  }
  return d;
}

// b(t) = sum_m y_m(t - delay_m); indices outside a channel read as zero.
inline std::vector<double> DelayAndSum(std::span<const std::vector<double>> channels,
                                       std::span<const int> delays) {
  if (channels.empty()) throw Error("delay-and-sum needs at least one channel");
  if (channels.size() != delays.size()) throw Error("one delay per channel required");
  const size_t len = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != len) throw Error("channel lengths differ");
  }
  std::vector<double> out(len, 0.0);
  const auto n = static_cast<long long>(len);
  for (size_t m = 0; m < channels.size(); ++m) {
    const long long d = delays[m];
    const long long lo = std::max(0LL, d);
    const long long hi = std::min(n, n + d);
    for (long long t = lo; t < hi; ++t) out[t] += channels[m][t - d];
  }
  return out;
}

inline SampleBuffer DelayAndSum(std::span<const SampleBuffer> channels,
                                std::span<const int> delays) {
  std::vector<std::vector<double>> raw;
  raw.reserve(channels.size());
  for (const auto& c : channels) raw.push_back(c.samples);
  return SampleBuffer(DelayAndSum(std::span<const std::vector<double>>(raw), delays));
}

// Normalised array response |sum_m exp(j 2 pi f (tau_m(src) - tau_m(look)))| / M.
inline double NarrowbandGain(const BeamformerConfig& cfg, double src_aoi,
                             double freq_hz) {
  cfg.Validate();
  if (!(freq_hz > 0.0 && freq_hz < kSampleRate / 2.0)) {
    throw Error("frequency must lie in (0, 8000) Hz");
  }
  const auto src = PlaneWaveDelays(cfg.mic_offsets, src_aoi, cfg.speed_of_sound);
  const auto look = PlaneWaveDelays(cfg.mic_offsets, cfg.look_aoi, cfg.speed_of_sound);
  std::complex<double> acc = 0.0;
  for (size_t m = 0; m < src.size(); ++m) {
    acc += std::polar(1.0, 2.0 * kPi * freq_hz * (src[m] - look[m]));
  }
  return std::abs(acc) / static_cast<double>(src.size());
}

struct BeampatternPoint {
  double angle_deg;
  double freq_hz;
  double gain;
};

inline std::vector<BeampatternPoint> Beampattern(const BeamformerConfig& cfg,
                                                 std::span<const double> angles_deg,
                                                 std::span<const double> freqs_hz) {
  std::vector<BeampatternPoint> rows;
  rows.reserve(angles_deg.size() * freqs_hz.size());
  for (double a : angles_deg) {
    for (double f : freqs_hz) {
      rows.push_back({a, f, NarrowbandGain(cfg, a * kPi / 180.0, f)});
    }
  }
  return rows;
}

}  // namespace beamsep
