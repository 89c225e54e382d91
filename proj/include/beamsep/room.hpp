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

// Shoebox image-source room simulation and randomized two-source scenes.
//
// Coordinates: x runs along the room width, y along the depth and z is the
// height above the floor. The microphone array is horizontal; angles of
// incidence are measured in the horizontal plane from the array broadside.

#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beamsep/beamforming.hpp"
#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/wav.hpp"

namespace beamsep {

using Position = Eigen::Vector3d;

struct RoomSpec {
  double height = 2.5;  // metres
  double width = 6.0;
  double depth = 6.0;
  double absorption = 0.35;  // energy absorbed per reflection, in (0, 1]
  int max_order = 10;

  void Validate() const {
    if (!(height > 0 && width > 0 && depth > 0)) throw Error("room dimensions must be positive");
    if (!(absorption > 0.0 && absorption <= 1.0)) throw Error("absorption must lie in (0, 1]");
    if (max_order < 0) throw Error("max_order must be nonnegative");
  }

  bool Contains(const Position& p) const {
    return p.x() > 0 && p.x() < width && p.y() > 0 && p.y() < depth && p.z() > 0 &&
           p.z() < height;
  }

  // Distance from p to the nearest wall, floor or ceiling.
  double Clearance(const Position& p) const {
    return std::min({p.x(), width - p.x(), p.y(), depth - p.y(), p.z(), height - p.z()});
  }
};

struct ArrayGeometry {
  std::vector<double> mic_offsets = KinectMicOffsets();
  Position center = Position::Zero();
  double orientation = 0.0;  // azimuth of the array axis, radians

  Eigen::Vector3d Axis() const {
    return {std::cos(orientation), std::sin(orientation), 0.0};
  }
  Eigen::Vector3d Broadside() const {
    return {-std::sin(orientation), std::cos(orientation), 0.0};
  }

  std::vector<Position> MicPositions() const {
    std::vector<Position> mics;
    mics.reserve(mic_offsets.size());
    for (double d : mic_offsets) mics.push_back(center + d * Axis());
    return mics;
  }

  // Horizontal-plane angle of incidence of a source at p.
  double AngleOfIncidence(const Position& p) const {
    const Eigen::Vector3d v = p - center;
    return std::atan2(v.dot(Axis()), v.dot(Broadside()));
  }

  // Point at horizontal distance `dist` and angle `aoi`, at array height.
  Position PointAt(double dist, double aoi) const {
    return center + dist * (std::sin(aoi) * Axis() + std::cos(aoi) * Broadside());
  }
};

struct SceneGeometry {
  RoomSpec room;
  ArrayGeometry array;
  Position src_speech = Position::Zero();
  Position src_noise = Position::Zero();
  double aoi_speech = 0.0;
  double aoi_noise = 0.0;
};

struct SceneConstraints {
  double min_distance = 1.6;  // speaker-to-array, metres
  double max_distance = 2.4;
  double wall_clearance = 1.0;
  double dimension_jitter = 0.2;  // relative, uniform
  double angle_jitter = 30.0 * kPi / 180.0;
  double nominal_aoi_speech = 45.0 * kPi / 180.0;
  double nominal_aoi_noise = -45.0 * kPi / 180.0;
  // false: nominal room, array centred, mean distances and nominal angles.
  bool jitter = true;
  int max_draws = 10000;
};

inline bool SceneSatisfies(const SceneGeometry& s, const SceneConstraints& c) {
  const double tol = 1e-9;
  for (const Position& m : s.array.MicPositions()) {
    if (s.room.Clearance(m) < c.wall_clearance - tol) return false;
  }
  for (const Position* p : {&s.src_speech, &s.src_noise}) {
    if (s.room.Clearance(*p) < c.wall_clearance - tol) return false;
    const double d = (*p - s.array.center).norm();
    if (d < c.min_distance - tol || d > c.max_distance + tol) return false;
  }
  return true;
}

inline SceneGeometry SampleScene(uint64_t seed, const RoomSpec& nominal,
                                 const SceneConstraints& c,
                                 const std::vector<double>& mic_offsets = KinectMicOffsets()) {
  nominal.Validate();
  SceneGeometry s;
  s.room = nominal;
  s.array.mic_offsets = mic_offsets;
  if (!c.jitter) {
    const double clearance_lo = c.wall_clearance;
    const double z = 0.5 * (clearance_lo + nominal.height - clearance_lo);
    s.array.center = {nominal.width / 2, nominal.depth / 2, z};
    s.array.orientation = 0.0;
    const double dist = 0.5 * (c.min_distance + c.max_distance);
    s.aoi_speech = c.nominal_aoi_speech;
    s.aoi_noise = c.nominal_aoi_noise;
    s.src_speech = s.array.PointAt(dist, s.aoi_speech);
    s.src_noise = s.array.PointAt(dist, s.aoi_noise);
    if (!SceneSatisfies(s, c)) throw Error("constraints unsatisfiable");
    return s;
  }
  Rng rng(seed);
  for (int draw = 0; draw < c.max_draws; ++draw) {
    s.room.height = nominal.height * rng.Uniform(1 - c.dimension_jitter, 1 + c.dimension_jitter);
    s.room.width = nominal.width * rng.Uniform(1 - c.dimension_jitter, 1 + c.dimension_jitter);
    s.room.depth = nominal.depth * rng.Uniform(1 - c.dimension_jitter, 1 + c.dimension_jitter);
    const double cl = c.wall_clearance;
    if (s.room.height < 2 * cl || s.room.width < 2 * cl || s.room.depth < 2 * cl) continue;
    s.array.center = {rng.Uniform(cl, s.room.width - cl), rng.Uniform(cl, s.room.depth - cl),
                      rng.Uniform(cl, s.room.height - cl)};
    s.array.orientation = rng.Uniform(0.0, 2 * kPi);
    const double d_speech = rng.Uniform(c.min_distance, c.max_distance);
    const double d_noise = rng.Uniform(c.min_distance, c.max_distance);
    s.aoi_speech = c.nominal_aoi_speech + rng.Uniform(-c.angle_jitter, c.angle_jitter);
    s.aoi_noise = c.nominal_aoi_noise + rng.Uniform(-c.angle_jitter, c.angle_jitter);
    s.src_speech = s.array.PointAt(d_speech, s.aoi_speech);
    s.src_noise = s.array.PointAt(d_noise, s.aoi_noise);
    if (SceneSatisfies(s, c)) return s;
  }
  throw Error("constraints unsatisfiable");
}

struct ImageSource {
  Position position;
  int order;  // number of wall reflections
};

// All shoebox images of `src` with reflection order <= max_order. Along one
// axis an image sits at (1 - 2u) x + 2 n L with |2n - u| reflections.
inline std::vector<ImageSource> EnumerateImages(const RoomSpec& room, const Position& src) {
  const int n_max = room.max_order;
  struct AxisImage {
    double coord;
    int order;
  };
  auto axis_images = [&](double x, double len) {
    std::vector<AxisImage> out;
    for (int n = -n_max; n <= n_max; ++n) {
      for (int u = 0; u <= 1; ++u) {
        const int k = std::abs(2 * n - u);
        if (k <= n_max) out.push_back({(1 - 2 * u) * x + 2.0 * n * len, k});
      }
    }
    return out;
  };
  const auto ix = axis_images(src.x(), room.width);
  const auto iy = axis_images(src.y(), room.depth);
  const auto iz = axis_images(src.z(), room.height);
  std::vector<ImageSource> images;
  for (const auto& a : ix) {
    for (const auto& b : iy) {
      if (a.order + b.order > n_max) continue;
      for (const auto& c : iz) {
        const int k = a.order + b.order + c.order;
        if (k <= n_max) images.push_back({Position(a.coord, b.coord, c.coord), k});
      }
    }
  }
  return images;
}

// Closed-form count of shoebox images up to max_order: one image of order 0
// and two of every positive order along each axis.
inline long long ImageCount(int max_order) {
  auto per_axis = [](int k) { return k == 0 ? 1LL : 2LL; };
  long long total = 0;
  for (int a = 0; a <= max_order; ++a) {
    for (int b = 0; a + b <= max_order; ++b) {
      for (int c = 0; a + b + c <= max_order; ++c) total += per_axis(a) * per_axis(b) * per_axis(c);
    }
  }
  return total;
}

inline int DelaySamples(double distance, int sample_rate = kSampleRate) {
  return static_cast<int>(std::lround(distance / kSpeedOfSound * sample_rate));
}

// Integer-delay image-source RIR. Each image of order r at distance d adds
// (1 - absorption)^(r/2) / (4 pi d) at sample round(d / c * fs).
inline ImpulseResponse ImageSourceRir(const RoomSpec& room, const Position& src,
                                      const Position& mic, int sample_rate = kSampleRate) {
  room.Validate();
  if (!room.Contains(src) || !room.Contains(mic)) {
    throw Error("source and microphone must lie strictly inside the room");
  }
  if ((src - mic).norm() < 1e-6) throw Error("source and microphone coincide");
  const std::vector<ImageSource> images = EnumerateImages(room, src);
  const double reflection = std::sqrt(1.0 - room.absorption);
  int max_delay = 0;
  std::vector<std::pair<int, double>> taps;
  taps.reserve(images.size());
  for (const ImageSource& img : images) {
    const double d = (img.position - mic).norm();
    const int delay = DelaySamples(d, sample_rate);
    const double amp = std::pow(reflection, img.order) / (4.0 * kPi * d);
    if (amp == 0.0) continue;
    taps.emplace_back(delay, amp);
    max_delay = std::max(max_delay, delay);
  }
  ImpulseResponse rir;
  rir.sample_rate = sample_rate;
  rir.taps.assign(static_cast<size_t>(max_delay) + 1, 0.0);
  for (const auto& [delay, amp] : taps) rir.taps[delay] += amp;
  return rir;
}

// Beamformed responses h_pq: look direction p, source q (0 = speech,
// 1 = noise). All four share one length.
struct RirQuadruple {
  std::array<ImpulseResponse, 4> h;  // h00, h01, h10, h11
  // Direct-path delay, in samples, from the speech source to the array centre.
  int speech_delay = 0;

  const ImpulseResponse& at(int look, int source) const { return h[2 * look + source]; }
  ImpulseResponse& at(int look, int source) { return h[2 * look + source]; }
};

// Unit-impulse quadruple: reverberant mixing then reduces to additive mixing.
inline RirQuadruple IdentityQuadruple() {
  RirQuadruple q;
  for (auto& r : q.h) r.taps = {1.0};
  return q;
}

// Beamformed RIR: sum over microphones of the per-microphone RIR delayed by
// that microphone's steering delay for look direction p.
inline std::vector<double> BeamformRirs(const std::vector<std::vector<double>>& mic_rirs,
                                        std::span<const int> delays) {
  size_t len = 0;
  for (const auto& r : mic_rirs) len = std::max(len, r.size());
  int max_shift = 0;
  for (int d : delays) max_shift = std::max(max_shift, d);
  len += static_cast<size_t>(max_shift);
  std::vector<std::vector<double>> padded = mic_rirs;
  for (auto& r : padded) r.resize(len, 0.0);
  return DelayAndSum(std::span<const std::vector<double>>(padded), delays);
}

inline RirQuadruple RenderQuadruple(const SceneGeometry& scene,
                                    double speed_of_sound = kSpeedOfSound) {
  const std::vector<Position> mics = scene.array.MicPositions();
  const std::array<Position, 2> sources = {scene.src_speech, scene.src_noise};
  const std::array<double, 2> look = {scene.aoi_speech, scene.aoi_noise};
  std::array<std::vector<std::vector<double>>, 2> per_mic;  // [source][mic]
  for (int q = 0; q < 2; ++q) {
    for (const Position& m : mics) {
      per_mic[q].push_back(ImageSourceRir(scene.room, sources[q], m).taps);
    }
  }
  RirQuadruple quad;
  for (int p = 0; p < 2; ++p) {
    BeamformerConfig bf;
    bf.mic_offsets = scene.array.mic_offsets;
    bf.speed_of_sound = speed_of_sound;
    bf.look_aoi = look[p];
    const SteeringDelays delays = ComputeSteeringDelays(bf);
    for (int q = 0; q < 2; ++q) {
      quad.at(p, q).taps = BeamformRirs(per_mic[q], delays.samples);
    }
  }
  size_t len = 0;
  for (const auto& r : quad.h) len = std::max(len, r.taps.size());
  for (auto& r : quad.h) r.taps.resize(len, 0.0);
  quad.speech_delay = DelaySamples((scene.src_speech - scene.array.center).norm());
  return quad;
}

inline nlohmann::json PositionToJson(const Position& p) {
  return nlohmann::json::array({p.x(), p.y(), p.z()});
}

inline Position PositionFromJson(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline nlohmann::json SceneToJson(const SceneGeometry& s) {
  return {
      {"room",
       {{"height", s.room.height},
        {"width", s.room.width},
        {"depth", s.room.depth},
        {"absorption", s.room.absorption},
        {"max_order", s.room.max_order}}},
      {"array",
       {{"mic_offsets", s.array.mic_offsets},
        {"center", PositionToJson(s.array.center)},
        {"orientation", s.array.orientation}}},
      {"src_speech", PositionToJson(s.src_speech)},
      {"src_noise", PositionToJson(s.src_noise)},
      {"aoi_speech", s.aoi_speech},
      {"aoi_noise", s.aoi_noise},
  };
}

inline SceneGeometry SceneFromJson(const nlohmann::json& j) {
  SceneGeometry s;
  const auto& r = j.at("room");
  s.room.height = r.at("height");
  s.room.width = r.at("width");
  s.room.depth = r.at("depth");
  s.room.absorption = r.at("absorption");
  s.room.max_order = r.at("max_order");
  const auto& a = j.at("array");
  s.array.mic_offsets = a.at("mic_offsets").get<std::vector<double>>();
  s.array.center = PositionFromJson(a.at("center"));
  s.array.orientation = a.at("orientation");
  s.src_speech = PositionFromJson(j.at("src_speech"));
  s.src_noise = PositionFromJson(j.at("src_noise"));
  s.aoi_speech = j.at("aoi_speech");
  s.aoi_noise = j.at("aoi_noise");
  return s;
}

// Raw little-endian float32 taps.
inline void WriteRawFloat32(const std::filesystem::path& path, std::span<const double> taps) {
  std::string bytes;
  bytes.reserve(taps.size() * 4);
  for (double v : taps) internal::PutU32(bytes, std::bit_cast<uint32_t>(static_cast<float>(v)));
  internal::WriteBytes(path, bytes);
}

inline std::vector<double> ReadRawFloat32(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  if (bytes.size() % 4 != 0) throw Error(path.string() + ": size is not a multiple of 4");
  std::vector<double> out(bytes.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(internal::ReadU32(bytes.data() + 4 * i));
  }
  return out;
}

inline const char* QuadrupleName(int index) {
  static constexpr const char* kNames[] = {"h00", "h01", "h10", "h11"};
  return kNames[index];
}

// Writes <stem>.h00.f32 ... <stem>.h11.f32 plus <stem>.json with sample
// rate, scene geometry and seed. Returns the sidecar path.
inline std::filesystem::path WriteQuadruple(const std::filesystem::path& dir,
                                            const std::string& stem,
                                            const RirQuadruple& quad,
                                            const SceneGeometry& scene, uint64_t seed) {
  nlohmann::json meta;
  meta["sample_rate"] = kSampleRate;
  meta["seed"] = seed;
  meta["geometry"] = SceneToJson(scene);
  meta["speech_delay"] = quad.speech_delay;
  meta["length"] = quad.h[0].taps.size();
  nlohmann::json files = nlohmann::json::object();
  for (int i = 0; i < 4; ++i) {
    const std::string name = stem + "." + QuadrupleName(i) + ".f32";
    WriteRawFloat32(dir / name, quad.h[i].taps);
    files[QuadrupleName(i)] = name;
  }
  meta["files"] = files;
  const std::filesystem::path sidecar = dir / (stem + ".json");
  internal::WriteBytes(sidecar, meta.dump(2) + "\n");
  return sidecar;
}

}  // namespace beamsep
