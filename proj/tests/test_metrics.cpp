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
#include <numeric>
#include <vector>

#include "beamsep/evaluate.hpp"
#include "beamsep/metrics.hpp"
#include "beamsep/synth.hpp"
#include "test_util.hpp"

namespace beamsep {
namespace {

using testing::GaussianNoise;
using testing::NoiseBuffer;
using testing::TempDir;

TEST(SpectralLogMseTest, EqualInputsHitFloor) {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(257, 10, 0.3);
  EXPECT_NEAR(SpectralLogMse(r, r), -120.0, 1e-9);
  EXPECT_EQ(SpectralLogMseLinear(r, r), 0.0);
}

TEST(SpectralLogMseTest, DoubledConstantMatchesClosedForm) {
  const double c = 0.7;
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(4, 5, c);
  const double d = std::log1p(2 * c) - std::log1p(c);
  EXPECT_NEAR(SpectralLogMse(2 * r, r), 10 * std::log10(d * d + 1e-12), 1e-12);
  EXPECT_THROW(SpectralLogMse(r, Eigen::MatrixXd::Zero(4, 4)), Error);
}

TEST(SpectralLogMseTest, NoiseIncreasesMetricInExpectation) {
  Rng rng(3);
  Eigen::MatrixXd ref(20, 30);
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref.data()[i] = std::abs(rng.Normal());
  Eigen::MatrixXd est = ref;
  for (Eigen::Index i = 0; i < est.size(); ++i) est.data()[i] += 0.05 * std::abs(rng.Normal());
  const double base = SpectralLogMseLinear(est, ref);
  double mean = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd noisy = est;
    for (Eigen::Index i = 0; i < noisy.size(); ++i) {
      noisy.data()[i] = std::max(0.0, noisy.data()[i] + 0.1 * rng.Normal());
    }
    mean += SpectralLogMseLinear(noisy, ref) / 100;
  }
  EXPECT_GT(mean, base);
}

TEST(SiSdrTest, IdentityAndScaleAreCapped) {
  const SampleBuffer s = NoiseBuffer(1, 1000);
  EXPECT_EQ(SiSdr(s, s), 60.0);
  SampleBuffer twice = s;
  for (double& v : twice.samples) v *= 2;
  EXPECT_EQ(SiSdr(twice, s), 60.0);
}

TEST(SiSdrTest, EqualPowerOrthogonalNoiseIsZeroDb) {
  const auto s = GaussianNoise(1, 4000);
  auto n = GaussianNoise(2, 4000);
  // Project out s, then scale to the power of s.
  const double a = std::inner_product(n.begin(), n.end(), s.begin(), 0.0) /
                   std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
  for (size_t i = 0; i < n.size(); ++i) n[i] -= a * s[i];
  const double k = std::sqrt(std::inner_product(s.begin(), s.end(), s.begin(), 0.0) /
                             std::inner_product(n.begin(), n.end(), n.begin(), 0.0));
  std::vector<double> est(s.size());
  for (size_t i = 0; i < s.size(); ++i) est[i] = s[i] + k * n[i];
  EXPECT_NEAR(SiSdr(est, s), 0.0, 0.1);
}

TEST(SiSdrTest, ScaleInvariantAndErrors) {
  const auto s = GaussianNoise(1, 500);
  auto est = GaussianNoise(2, 500);
  for (size_t i = 0; i < est.size(); ++i) est[i] = s[i] + 0.3 * est[i];
  std::vector<double> scaled = est;
  for (double& v : scaled) v *= 3.7;
  EXPECT_NEAR(SiSdr(scaled, s), SiSdr(est, s), 1e-9);
  EXPECT_THROW(SiSdr(est, std::vector<double>(500, 0.0)), Error);
  EXPECT_THROW(SiSdr(est, std::vector<double>(499, 1.0)), Error);
  EXPECT_TRUE(std::isfinite(SiSdr(s, est)));  // swapped inputs stay finite
}

TEST(SegmentalSnrTest, Cases) {
  const SampleBuffer s = NoiseBuffer(1, 4800);
  EXPECT_EQ(SegmentalSnr(s, s), 35.0);
  // Noise with the same power in every segment.
  SampleBuffer est = s;
  const auto n = GaussianNoise(2, 4800);
  for (size_t seg = 0; seg < 10; ++seg) {
    double ps = 0, pn = 0;
    for (size_t i = seg * 480; i < (seg + 1) * 480; ++i) {
      ps += s.samples[i] * s.samples[i];
      pn += n[i] * n[i];
    }
    const double k = std::sqrt(ps / pn);
    for (size_t i = seg * 480; i < (seg + 1) * 480; ++i) est.samples[i] += k * n[i];
  }
  EXPECT_NEAR(SegmentalSnr(est, s), 0.0, 1e-9);
  const SampleBuffer silent(std::vector<double>(4800, 0.0));
  EXPECT_THROW(SegmentalSnr(s, silent), Error);
  // Silent reference segments are skipped, not scored.
  SampleBuffer half = s;
  std::fill(half.samples.begin(), half.samples.begin() + 2400, 0.0);
  EXPECT_EQ(SegmentalSnr(half, half), 35.0);
  // Very poor segments clamp at -10 dB.
  SampleBuffer bad = s;
  for (size_t i = 0; i < bad.size(); ++i) bad.samples[i] = s.samples[i] + 100 * n[i];
  EXPECT_EQ(SegmentalSnr(bad, s), -10.0);
}

class EvaluateTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticCorpusSpec spec;
    spec.train = 1;
    spec.dev = 1;
    spec.test = 3;
    spec.noise_seconds = 6;
    spec.babble_streams = 2;
    WriteSyntheticCorpus(dir_ / "corpus", 5, spec);
    manifest_ = BuildDataset(dir_ / "corpus", dir_ / "corpus/noise.wav", Condition::kNoReverb,
                             "test", 1, dir_ / "ds");
  }
  TempDir dir_{"eval"};
  DatasetManifest manifest_;
};

TEST_F(EvaluateTest, IdentityModelEqualsBaseline) {
  EvalOptions opt;
  const EvalRow row = EvaluateManifest(manifest_, {IdentityEstimator()}, opt);
  ASSERT_EQ(row.enhanced.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(row.enhanced[i].id, row.baseline[i].id);
    EXPECT_EQ(row.enhanced[i].log_mse, row.baseline[i].log_mse);
    EXPECT_EQ(row.enhanced[i].si_sdr_db, row.baseline[i].si_sdr_db);
    EXPECT_EQ(row.enhanced[i].seg_snr_db, row.baseline[i].seg_snr_db);
  }
  EXPECT_EQ(row.enhanced[0].id, "test0000");
}

TEST_F(EvaluateTest, OracleMagnitudeBeatsBaseline) {
  // Returns the clean magnitude of the utterance being enhanced, window by
  // window; enhancement order matches manifest order.
  std::vector<Eigen::MatrixXd> clean;
  for (const auto& e : manifest_.entries) {
    const LoadedUtterance u = LoadEntry(manifest_, e);
    clean.push_back(ReflectPadFrames(PaddedStft(AlignLength(u.s0, u.b0.size()), manifest_.stft)
                                         .Magnitude(),
                                     160)
                        .magnitude());
  }
  size_t utt = 0;
  Eigen::Index next = 0;
  WindowEstimator oracle = [&](const Eigen::MatrixXd& b0, const Eigen::MatrixXd&) {
    if (next >= clean[utt].cols()) {
      ++utt;
      next = 0;
    }
    Eigen::MatrixXd out = clean[utt].middleCols(next, b0.cols());
    next += b0.cols();
    return out;
  };
  const EvalRow row = EvaluateManifest(manifest_, {oracle}, EvalOptions{});
  const ScoreSummary e = row.enhanced_summary(), b = row.baseline_summary();
  EXPECT_LT(e.log_mse, b.log_mse);
  EXPECT_GT(e.si_sdr_db, b.si_sdr_db);
}

TEST_F(EvaluateTest, WindowSweepAndReportRoundTrip) {
  std::vector<EvalRow> rows;
  for (int w : {160, 320, 640}) {
    EvalOptions opt;
    opt.window_frames = w;
    EvalRow row = EvaluateManifest(manifest_, {IdentityEstimator()}, opt);
    row.fusion = "cbp";
    row.input_mode = "both";
    rows.push_back(row);
  }
  const nlohmann::json j = ReportToJson("ds", "test", rows);
  EXPECT_EQ(j.at("rows").size(), 3u);
  EXPECT_TRUE(j.at("wer").is_null());
  EXPECT_EQ(j.at("rows")[2].at("window_frames"), 640);
  const std::string text = j.dump(2);
  EXPECT_EQ(nlohmann::json::parse(text).dump(2), text);
  const std::string table = ReportTable(rows);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_THROW(EvaluateManifest(manifest_, {}, EvalOptions{}), Error);
}

}  // namespace
}  // namespace beamsep
