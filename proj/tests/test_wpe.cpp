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
#include <complex>

#include "beamsep/wpe.hpp"
#include "test_util.hpp"

namespace beamsep {
namespace {

Eigen::VectorXcd WhiteTrajectory(uint64_t seed, int frames, double keep = 1.0) {
  Rng rng(seed);
  Eigen::VectorXcd s(frames);
  for (int f = 0; f < frames; ++f) {
    const std::complex<double> v(rng.Normal(), rng.Normal());
    s(f) = rng.Uniform() < keep ? v : 0.01 * v;  // inactive frames 40 dB down
  }
  return s;
}

// x[f] = s[f] + a x[f - lag].
Eigen::VectorXcd ArReverb(const Eigen::VectorXcd& s, double a, int lag) {
  Eigen::VectorXcd x = s;
  for (int f = lag; f < x.size(); ++f) x(f) += a * x(f - lag);
  return x;
}

TEST(WpeConfigTest, RejectsInvalidSettings) {
  WpeConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.iterations = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = WpeConfig{};
  cfg.taps = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = WpeConfig{};
  cfg.delay = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = WpeConfig{};
  cfg.floor = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  WpeConfig zero_iters;
  zero_iters.iterations = 0;
  EXPECT_THROW(WpeSingle(Spectrogram::FromComplex(Eigen::MatrixXcd::Ones(3, 50)), zero_iters),
               Error);
}

TEST(WpeTest, TooFewFramesIsAnError) {
  const WpeConfig cfg;
  EXPECT_THROW(WpeSingle(Spectrogram::FromComplex(Eigen::MatrixXcd::Ones(2, 13)), cfg), Error);
  EXPECT_NO_THROW(WpeSingle(Spectrogram::FromComplex(Eigen::MatrixXcd::Ones(2, 14)), cfg));
}

TEST(WpeTest, ImpulseHasNothingToPredict) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(60);
  x(40) = {1.0, -2.0};  // no earlier frames, so every delayed row is zero
  EXPECT_EQ(WpeBin(x, WpeConfig{}), x);
}

TEST(WpeTest, WhiteInputIsNearlyUnchanged) {
  const WpeConfig cfg;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXcd x = WhiteTrajectory(seed, 400);
    const Eigen::VectorXcd d = WpeBin(x, cfg);
    EXPECT_LT(std::abs(d.squaredNorm() / x.squaredNorm() - 1.0), 0.05);
  }
}

TEST(WpeTest, ArReverberationLateEnergyDropsSixDb) {
  WpeConfig cfg;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXcd s = WhiteTrajectory(100 + seed, 400, 0.2);
    const Eigen::VectorXcd x = ArReverb(s, 0.8, cfg.delay);
    const Eigen::VectorXcd d = WpeBin(x, cfg);
    const double late_before = (x - s).squaredNorm();
    const double late_after = (d - s).squaredNorm();
    EXPECT_GE(10 * std::log10(late_before / late_after), 6.0) << seed;
    // Direct-to-late ratio improves by the same margin.
    const double dlr_before = s.squaredNorm() / late_before;
    const double dlr_after = s.squaredNorm() / late_after;
    EXPECT_GE(10 * std::log10(dlr_after / dlr_before), 6.0);
  }
}

TEST(WpePairTest, IdenticalInputsGiveIdenticalOutputs) {
  Eigen::MatrixXcd x(4, 120);
  for (int b = 0; b < 4; ++b) {
    x.row(b) = ArReverb(WhiteTrajectory(b, 120, 0.3), 0.6, 3 + b).transpose();
  }
  const Spectrogram s = Spectrogram::FromComplex(x);
  const auto [d0, d1] = WpePair(s, s);
  EXPECT_EQ(d0.complex(), d1.complex());
  EXPECT_EQ(d0.frames(), s.frames());
  EXPECT_EQ(d0.bins(), s.bins());
  EXPECT_EQ(WpeSingle(s).complex(), d0.complex());  // deterministic
}

TEST(WpePairTest, BothChannelsDereverberate) {
  const int bins = 3, frames = 300;
  Eigen::MatrixXcd s0(bins, frames), s1(bins, frames), x0(bins, frames), x1(bins, frames);
  for (int b = 0; b < bins; ++b) {
    const Eigen::VectorXcd a = WhiteTrajectory(10 + b, frames, 0.2);
    const Eigen::VectorXcd c = WhiteTrajectory(20 + b, frames, 0.2);
    s0.row(b) = a.transpose();
    s1.row(b) = c.transpose();
    x0.row(b) = ArReverb(a, 0.7, 4).transpose();
    x1.row(b) = ArReverb(c, 0.7, 5).transpose();
  }
  const auto [d0, d1] =
      WpePair(Spectrogram::FromComplex(x0), Spectrogram::FromComplex(x1), WpeConfig{});
  EXPECT_LT((d0.complex() - s0).squaredNorm(), (x0 - s0).squaredNorm());
  EXPECT_LT((d1.complex() - s1).squaredNorm(), (x1 - s1).squaredNorm());
}

TEST(WpeTest, EnergyNeverGrowsBeyondOnePercentPerBin) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const double a = rng.Uniform(0.0, 0.9);
    const int lag = 1 + static_cast<int>(rng.UniformInt(6));
    const Eigen::VectorXcd x = ArReverb(WhiteTrajectory(seed, 200, rng.Uniform(0.1, 1.0)), a, lag);
    const Eigen::VectorXcd d = WpeBin(x, WpeConfig{});
    EXPECT_LE(d.squaredNorm(), 1.01 * x.squaredNorm()) << seed;
  }
}

}  // namespace
}  // namespace beamsep
