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

#include "beamsep/cbp.hpp"
#include "test_util.hpp"

namespace beamsep {
namespace {

using testing::GaussianNoise;

// Count sketch of the explicit outer product u w^T, hashed by
// (hu[i] + hw[j]) mod d with sign su[i] sw[j].
std::vector<double> OuterProductSketch(const std::vector<double>& u, const std::vector<double>& w,
                                       const SketchParams& pu, const SketchParams& pw) {
  std::vector<double> out(pu.d_out, 0.0);
  for (size_t i = 0; i < u.size(); ++i) {
    for (size_t j = 0; j < w.size(); ++j) {
      out[(pu.h[i] + pw.h[j]) % pu.d_out] += pu.s[i] * pw.s[j] * u[i] * w[j];
    }
  }
  return out;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

TEST(SketchParamsTest, DrawIsSeededAndValid) {
  const SketchParams p = MakeSketchParams(257, 16, 3);
  EXPECT_NO_THROW(p.Validate());
  EXPECT_EQ(p, MakeSketchParams(257, 16, 3));
  EXPECT_NE(p, MakeSketchParams(257, 16, 4));
  SketchParams bad = p;
  bad.h[0] = 16;
  EXPECT_THROW(bad.Validate(), Error);
  bad = p;
  bad.s[1] = 0;
  EXPECT_THROW(bad.Validate(), Error);
  EXPECT_THROW(MakeSketchParams(0, 4, 1), Error);
}

TEST(CountSketchTest, HandExample) {
  SketchParams p;
  p.d_out = 3;
  p.h = {0, 2, 0, 1};
  p.s = {1, -1, -1, 1};
  const std::vector<double> v = {1, 2, 3, 4};
  EXPECT_EQ(CountSketch(v, p), (std::vector<double>{1 - 3, 4, -2}));
  EXPECT_THROW(CountSketch(std::vector<double>{1, 2}, p), Error);
}

TEST(CountSketchTest, IsLinear) {
  const SketchParams p = MakeSketchParams(20, 7, 9);
  const auto a = GaussianNoise(1, 20), b = GaussianNoise(2, 20);
  std::vector<double> c(20);
  for (int i = 0; i < 20; ++i) c[i] = 2.5 * a[i] - b[i];
  const auto sa = CountSketch(a, p), sb = CountSketch(b, p), sc = CountSketch(c, p);
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(sc[k], 2.5 * sa[k] - sb[k], 1e-12);
}

TEST(CompactBilinearTest, TensorSketchIdentity) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.UniformInt(7));
    const int d_out = 4 + static_cast<int>(rng.UniformInt(13));
    const SketchParams pu = MakeSketchParams(d, d_out, 1000 + trial);
    const SketchParams pw = MakeSketchParams(d, d_out, 2000 + trial);
    const auto u = GaussianNoise(3000 + trial, d), w = GaussianNoise(4000 + trial, d);
    const auto fast = CompactBilinear(u, w, pu, pw);
    const auto oracle = OuterProductSketch(u, w, pu, pw);
    ASSERT_EQ(fast.size(), oracle.size());
    for (int k = 0; k < d_out; ++k) EXPECT_NEAR(fast[k], oracle[k], 1e-10);
  }
}

TEST(CompactBilinearTest, ZeroFactorGivesZero) {
  const SketchParams pu = MakeSketchParams(5, 8, 1), pw = MakeSketchParams(5, 8, 2);
  for (double v : CompactBilinear(std::vector<double>(5, 0.0), GaussianNoise(1, 5), pu, pw)) {
    EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(CompactBilinear(GaussianNoise(1, 5), GaussianNoise(2, 5), pu,
                               MakeSketchParams(5, 9, 2)),
               Error);
}

TEST(CountSketchTest, InnerProductIsUnbiased) {
  const int d = 32;
  for (int pair = 0; pair < 10; ++pair) {
    auto u = GaussianNoise(10 + pair, d), w = GaussianNoise(20 + pair, d);
    // Correlate the pair so that the target inner product is well away from 0.
    for (int i = 0; i < d; ++i) w[i] = 0.7 * u[i] + 0.3 * w[i];
    const double truth = Dot(u, w);
    double mean = 0;
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      const SketchParams p = MakeSketchParams(d, 16, 100000 * (pair + 1) + k);
      mean += Dot(CountSketch(u, p), CountSketch(w, p));
    }
    mean /= draws;
    EXPECT_NEAR(mean / truth, 1.0, 0.05) << "pair " << pair;
  }
}

TEST(CountSketchTest, VarianceShrinksWithSketchSize) {
  const int d = 300;
  const auto u = GaussianNoise(1, d), w = GaussianNoise(2, d);
  auto variance = [&](int d_out) {
    double s = 0, s2 = 0;
    const int draws = 2000;
    for (int k = 0; k < draws; ++k) {
      const SketchParams p = MakeSketchParams(d, d_out, 7 * k + d_out);
      const double v = Dot(CountSketch(u, p), CountSketch(w, p));
      s += v;
      s2 += v * v;
    }
    return s2 / draws - (s / draws) * (s / draws);
  };
  EXPECT_LT(variance(256), variance(16));
}

TEST(CbpFramewiseTest, ColumnsMatchSingleVectorPath) {
  const SketchParams pu = MakeSketchParams(6, 10, 1), pw = MakeSketchParams(5, 10, 2);
  Eigen::MatrixXd a(6, 4), b(5, 4);
  a = Eigen::Map<const Eigen::MatrixXd>(GaussianNoise(3, 24).data(), 6, 4);
  b = Eigen::Map<const Eigen::MatrixXd>(GaussianNoise(4, 20).data(), 5, 4);
  const Eigen::MatrixXd y = CbpFramewise<double>(a, b, pu, pw);
  ASSERT_EQ(y.rows(), 10);
  ASSERT_EQ(y.cols(), 4);
  for (int f = 0; f < 4; ++f) {
    const Eigen::VectorXd ca = a.col(f), cb = b.col(f);
    const auto col = CompactBilinear(std::span<const double>(ca.data(), 6),
                                     std::span<const double>(cb.data(), 5), pu, pw);
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(y(k, f), col[k], 1e-12);
  }
  // Permuting frames permutes output columns.
  Eigen::MatrixXd ap = a, bp = b;
  ap.col(0).swap(ap.col(3));
  bp.col(0).swap(bp.col(3));
  const Eigen::MatrixXd yp = CbpFramewise<double>(ap, bp, pu, pw);
  EXPECT_NEAR((yp.col(0) - y.col(3)).norm(), 0.0, 1e-12);
  EXPECT_THROW(CbpFramewise<double>(a, b.leftCols(3), pu, pw), Error);
}

TEST(CbpBackwardTest, MatchesFiniteDifferences) {
  const SketchParams pu = MakeSketchParams(5, 7, 11), pw = MakeSketchParams(4, 7, 12);
  Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(GaussianNoise(1, 15).data(), 5, 3);
  Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(GaussianNoise(2, 12).data(), 4, 3);
  const Eigen::MatrixXd g = Eigen::Map<const Eigen::MatrixXd>(GaussianNoise(3, 21).data(), 7, 3);
  // Scalar objective L = sum(g .* cbp(a, b)).
  auto loss = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (g.array() * CbpFramewise<double>(x, y, pu, pw).array()).sum();
  };
  const auto [ga, gb] = CbpBackward<double>(g, a, b, pu, pw);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    Eigen::MatrixXd ap = a, am = a;
    ap.data()[i] += h;
    am.data()[i] -= h;
    EXPECT_NEAR(ga.data()[i], (loss(ap, b) - loss(am, b)) / (2 * h), 1e-7);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    Eigen::MatrixXd bp = b, bm = b;
    bp.data()[i] += h;
    bm.data()[i] -= h;
    EXPECT_NEAR(gb.data()[i], (loss(a, bp) - loss(a, bm)) / (2 * h), 1e-7);
  }
}

}  // namespace
}  // namespace beamsep
