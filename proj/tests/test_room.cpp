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

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "beamsep/room.hpp"
#include "test_util.hpp"

namespace beamsep {
namespace {

using testing::TempDir;

std::set<std::tuple<long, long, long>> Keys(const std::vector<ImageSource>& images) {
  std::set<std::tuple<long, long, long>> out;
  for (const auto& i : images) {
    out.insert({std::lround(i.position.x() * 1e6), std::lround(i.position.y() * 1e6),
                std::lround(i.position.z() * 1e6)});
  }
  return out;
}

TEST(ImageSourceTest, FirstOrderImagesByHand) {
  RoomSpec room;
  room.width = 5;
  room.depth = 4;
  room.height = 3;
  room.max_order = 1;
  const Position s(1.0, 1.5, 0.7);
  const auto images = EnumerateImages(room, s);
  ASSERT_EQ(images.size(), 7u);
  const std::vector<ImageSource> expected = {
      {s, 0},
      {Position(-1.0, 1.5, 0.7), 1}, {Position(9.0, 1.5, 0.7), 1},
      {Position(1.0, -1.5, 0.7), 1}, {Position(1.0, 6.5, 0.7), 1},
      {Position(1.0, 1.5, -0.7), 1}, {Position(1.0, 1.5, 5.3), 1}};
  EXPECT_EQ(Keys(images), Keys(expected));
  for (const auto& i : images) EXPECT_EQ(i.order, (i.position - s).norm() < 1e-12 ? 0 : 1);
}

TEST(ImageSourceTest, CountsMatchClosedForm) {
  EXPECT_EQ(ImageCount(0), 1);
  EXPECT_EQ(ImageCount(1), 7);
  EXPECT_EQ(ImageCount(2), 25);
  RoomSpec room;
  for (int order = 0; order <= 6; ++order) {
    room.max_order = order;
    const auto images = EnumerateImages(room, Position(1.1, 2.2, 0.9));
    EXPECT_EQ(static_cast<long long>(images.size()), ImageCount(order));
    EXPECT_EQ(Keys(images).size(), images.size());  // all distinct
    for (const auto& i : images) EXPECT_LE(i.order, order);
  }
}

TEST(ImageSourceTest, OneDimensionalReflectionDistances) {
  // Source and mic on a line; second-order images along x only.
  RoomSpec room;
  room.width = 4;
  room.depth = 100;
  room.height = 100;
  room.max_order = 2;
  const Position s(1.0, 50, 50), m(3.0, 50, 50);
  std::vector<double> dx;
  for (const auto& i : EnumerateImages(room, s)) {
    if (std::abs(i.position.y() - 50) < 1e-9 && std::abs(i.position.z() - 50) < 1e-9) {
      dx.push_back(std::abs(i.position.x() - m.x()));
    }
  }
  std::sort(dx.begin(), dx.end());
  // Images at 1 (direct), -1 and 7 (first order), 9 and -7 (second order).
  const std::vector<double> expected = {2, 4, 4, 6, 10};
  ASSERT_EQ(dx.size(), expected.size());
  for (size_t i = 0; i < dx.size(); ++i) EXPECT_NEAR(dx[i], expected[i], 1e-12);
}

TEST(RirTest, DirectPathArrivesAtRoundedDelay) {
  RoomSpec room;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Position s(rng.Uniform(0.5, 5.5), rng.Uniform(0.5, 5.5), rng.Uniform(0.5, 2.0));
    const Position m(rng.Uniform(0.5, 5.5), rng.Uniform(0.5, 5.5), rng.Uniform(0.5, 2.0));
    const ImpulseResponse h = ImageSourceRir(room, s, m);
    const auto first = std::find_if(h.taps.begin(), h.taps.end(), [](double v) { return v != 0; });
    const double d = (s - m).norm();
    EXPECT_EQ(first - h.taps.begin(), std::lround(d / 343.0 * 16000));
    EXPECT_GE(*first, 1.0 / (4 * kPi * d) - 1e-15);
  }
}

TEST(RirTest, AnechoicRoomKeepsOnlyDirectPath) {
  RoomSpec room;
  room.absorption = 1.0;
  const Position s(2, 2, 1), m(4, 3, 1.5);
  const ImpulseResponse h = ImageSourceRir(room, s, m);
  int nonzero = 0;
  for (double v : h.taps) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_NEAR(h.taps.back(), 1.0 / (4 * kPi * (s - m).norm()), 1e-15);
}

TEST(RirTest, RejectsPointsOutsideRoom) {
  RoomSpec room;
  EXPECT_THROW(ImageSourceRir(room, Position(-1, 1, 1), Position(2, 2, 1)), Error);
  EXPECT_THROW(ImageSourceRir(room, Position(2, 2, 1), Position(2, 2, 1)), Error);
  room.absorption = 0;
  EXPECT_THROW(ImageSourceRir(room, Position(1, 1, 1), Position(2, 2, 1)), Error);
}

TEST(SceneTest, SampledScenesSatisfyConstraints) {
  RoomSpec nominal;
  SceneConstraints c;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const SceneGeometry s = SampleScene(seed, nominal, c);
    EXPECT_TRUE(SceneSatisfies(s, c));
    EXPECT_NEAR(s.array.AngleOfIncidence(s.src_speech), s.aoi_speech, 1e-9);
    EXPECT_NEAR(s.array.AngleOfIncidence(s.src_noise), s.aoi_noise, 1e-9);
    EXPECT_LE(std::abs(s.aoi_speech - c.nominal_aoi_speech), c.angle_jitter + 1e-12);
    EXPECT_LE(std::abs(s.room.width / nominal.width - 1), c.dimension_jitter + 1e-12);
  }
  const SceneGeometry a = SampleScene(9, nominal, c), b = SampleScene(9, nominal, c);
  EXPECT_EQ(a.src_speech, b.src_speech);
  EXPECT_EQ(a.room.width, b.room.width);
}

TEST(SceneTest, UnsatisfiableConstraintsError) {
  SceneConstraints c;
  c.min_distance = 10;
  c.max_distance = 12;
  c.max_draws = 100;
  EXPECT_THROW(SampleScene(1, RoomSpec{}, c), Error);
  c.jitter = false;
  EXPECT_THROW(SampleScene(1, RoomSpec{}, c), Error);
}

TEST(QuadrupleTest, AnechoicPeaksAlign) {
  SceneConstraints c;
  c.jitter = false;
  RoomSpec room;
  room.absorption = 1.0;
  const SceneGeometry scene = SampleScene(0, room, c);
  const RirQuadruple q = RenderQuadruple(scene);
  for (const auto& h : q.h) EXPECT_EQ(h.taps.size(), q.h[0].taps.size());
  const auto mics = scene.array.MicPositions();
  double direct_sum = 0;
  for (const auto& m : mics) direct_sum += 1.0 / (4 * kPi * (scene.src_speech - m).norm());
  const auto& h00 = q.at(0, 0).taps;
  const size_t peak = std::max_element(h00.begin(), h00.end()) - h00.begin();
  double around = 0;
  for (size_t i = peak - 1; i <= peak + 1; ++i) around += h00[i];
  EXPECT_NEAR(around, direct_sum, 1e-12);
  EXPECT_GE(h00[peak], 0.5 * direct_sum);
  EXPECT_EQ(q.speech_delay, DelaySamples((scene.src_speech - scene.array.center).norm()));
}

TEST(QuadrupleTest, MirrorSymmetricSceneGivesEqualDiagonalEnergy) {
  SceneConstraints c;
  c.jitter = false;
  const std::vector<double> mirrored = {-0.113, -0.038, 0.038, 0.113};
  const SceneGeometry scene = SampleScene(0, RoomSpec{}, c, mirrored);
  const RirQuadruple q = RenderQuadruple(scene);
  auto energy = [](const ImpulseResponse& h) {
    double e = 0;
    for (double v : h.taps) e += v * v;
    return e;
  };
  EXPECT_NEAR(energy(q.at(1, 1)) / energy(q.at(0, 0)), 1.0, 0.01);
  // The look beam favours its own source.
  EXPECT_GT(energy(q.at(0, 0)), energy(q.at(1, 0)));
}

TEST(QuadrupleTest, WriteAndReadBack) {
  TempDir dir("quad");
  SceneConstraints c;
  c.jitter = false;
  RoomSpec room;
  room.max_order = 2;
  const SceneGeometry scene = SampleScene(0, room, c);
  const RirQuadruple q = RenderQuadruple(scene);
  const auto sidecar = WriteQuadruple(dir.path(), "x", q, scene, 42);
  const auto bytes = ReadFileBytes(sidecar);
  const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
  EXPECT_EQ(j.at("seed"), 42);
  EXPECT_EQ(j.at("speech_delay"), q.speech_delay);
  const SceneGeometry back = SceneFromJson(j.at("geometry"));
  EXPECT_NEAR((back.src_speech - scene.src_speech).norm(), 0, 1e-12);
  const auto h01 = ReadRawFloat32(dir / j.at("files").at("h01").get<std::string>());
  ASSERT_EQ(h01.size(), q.at(0, 1).taps.size());
  for (size_t i = 0; i < h01.size(); ++i) {
    EXPECT_EQ(h01[i], static_cast<double>(static_cast<float>(q.at(0, 1).taps[i])));
  }
}

}  // namespace
}  // namespace beamsep
