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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "beamsep/beamforming.hpp"
#include "test_util.hpp"

namespace beamsep {
namespace {

using testing::GaussianNoise;

TEST(SteeringTest, DelaysFollowPlaneWaveLaw) {
  BeamformerConfig cfg;
  cfg.look_aoi = kPi / 4;
  const SteeringDelays d = ComputeSteeringDelays(cfg);
  for (size_t m = 0; m < cfg.mic_offsets.size(); ++m) {
    EXPECT_NEAR(d.seconds[m], cfg.mic_offsets[m] * std::sin(kPi / 4) / 343.0, 1e-15);
    EXPECT_EQ(d.samples[m], std::lround(d.seconds[m] * 16000));
  }
  cfg.look_aoi = 0;
  for (int s : ComputeSteeringDelays(cfg).samples) EXPECT_EQ(s, 0);
  cfg.look_aoi = 2.0;
  EXPECT_THROW(ComputeSteeringDelays(cfg), Error);
}

TEST(DelayAndSumTest, ZeroDelaysSumChannels) {
  const std::vector<std::vector<double>> ch = {{1, 2, 3}, {4, 5, 6}};
  const std::vector<int> delays = {0, 0};
  EXPECT_EQ(DelayAndSum(std::span<const std::vector<double>>(ch), delays),
            (std::vector<double>{5, 7, 9}));
}

TEST(DelayAndSumTest, ShiftsWithZeroFill) {
  const std::vector<std::vector<double>> ch = {{1, 2, 3, 4}};
  EXPECT_EQ(DelayAndSum(std::span<const std::vector<double>>(ch), std::vector<int>{1}),
            (std::vector<double>{0, 1, 2, 3}));
  EXPECT_EQ(DelayAndSum(std::span<const std::vector<double>>(ch), std::vector<int>{-2}),
            (std::vector<double>{3, 4, 0, 0}));
  EXPECT_THROW(DelayAndSum(std::span<const std::vector<double>>(ch), std::vector<int>{}), Error);
}

TEST(DelayAndSumTest, RealignsSteeredPlaneWave) {
  BeamformerConfig cfg;
  cfg.look_aoi = 40.0 * kPi / 180;
  const SteeringDelays d = ComputeSteeringDelays(cfg);
  const auto s = GaussianNoise(3, 2000);
  std::vector<std::vector<double>> ch;
  for (int delay : d.samples) {
    // Microphone m hears the wave `delay` samples early.
    std::vector<double> y(s.size(), 0.0);
    for (size_t t = 0; t < s.size(); ++t) {
      const long src = static_cast<long>(t) + delay;
      if (src >= 0 && src < static_cast<long>(s.size())) y[t] = s[src];
    }
    ch.push_back(y);
  }
  const auto b = DelayAndSum(std::span<const std::vector<double>>(ch), d.samples);
  for (size_t t = 20; t + 20 < s.size(); ++t) EXPECT_NEAR(b[t], 4 * s[t], 1e-12);
}

TEST(NarrowbandGainTest, UnityAtLookAndBoundedElsewhere) {
  BeamformerConfig cfg;
  cfg.look_aoi = kPi / 4;
  for (double f : {100.0, 1000.0, 4000.0, 7900.0}) {
    EXPECT_NEAR(NarrowbandGain(cfg, kPi / 4, f), 1.0, 1e-12);
    for (int a = -90; a <= 90; a += 5) {
      const double g = NarrowbandGain(cfg, a * kPi / 180, f);
      EXPECT_GE(g, 0.0);
      EXPECT_LE(g, 1.0 + 1e-12);
    }
  }
  EXPECT_THROW(NarrowbandGain(cfg, 0, 0.0), Error);
  EXPECT_THROW(NarrowbandGain(cfg, 0, 8000.0), Error);
}

TEST(NarrowbandGainTest, MatchesDirectPhasorSum) {
  BeamformerConfig cfg;
  cfg.look_aoi = -0.3;
  const double src = 0.9, f = 2500;
  double re = 0, im = 0;
  for (double x : cfg.mic_offsets) {
    const double phase = 2 * kPi * f * x * (std::sin(src) - std::sin(-0.3)) / 343.0;
    re += std::cos(phase);
    im += std::sin(phase);
  }
  EXPECT_NEAR(NarrowbandGain(cfg, src, f), std::hypot(re, im) / 4, 1e-12);
}

TEST(BeampatternTest, GridShape) {
  BeamformerConfig cfg;
  const std::vector<double> angles = {-90, 0, 90};
  const std::vector<double> freqs = {500, 1000};
  const auto rows = Beampattern(cfg, angles, freqs);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].angle_deg, -90);
  EXPECT_EQ(rows[1].freq_hz, 1000);
  EXPECT_NEAR(rows[2].gain, 1.0, 1e-12);  // broadside look, broadside source
}

TEST(ArrayGainTest, CoherentTargetGainsTenLogM) {
  // Target steered exactly; independent unit noise on every microphone.
  const int m = 4;
  double total = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const auto s = GaussianNoise(100 + trial, 8000);
    std::vector<std::vector<double>> noisy(m), noise_only(m);
    for (int k = 0; k < m; ++k) {
      noise_only[k] = GaussianNoise(1000 * trial + k, 8000);
      noisy[k] = s;
    }
    const std::vector<int> delays(m, 0);
    const auto bs = DelayAndSum(std::span<const std::vector<double>>(noisy), delays);
    const auto bn = DelayAndSum(std::span<const std::vector<double>>(noise_only), delays);
    const double in_snr = MeanPower(s, s.size()) / MeanPower(noise_only[0], s.size());
    const double out_snr = MeanPower(bs, bs.size()) / MeanPower(bn, bn.size());
    total += 10 * std::log10(out_snr / in_snr);
  }
  EXPECT_NEAR(total / trials, 10 * std::log10(4.0), 0.5);
}

}  // namespace
}  // namespace beamsep
