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

// Dataset builder and manifest I/O.
//
// Layout written under the output directory:
//   <split>/manifest.json
//   <split>/<id>.b0.wav, <id>.b1.wav, <id>.s0.wav
//   <split>/rirs/<id>.*      (RirMulticondition)
//   rirs/matched.*           (RirMatched, shared by every split)

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/datagen.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/room.hpp"
#include "beamsep/wav.hpp"

namespace beamsep {

inline constexpr int kManifestVersion = 1;

struct DatagenOptions {
  RoomSpec nominal_room;
  SceneConstraints constraints;
  std::vector<double> mic_offsets = KinectMicOffsets();
  double snr_min = 0.0;
  double snr_max = 15.0;
  Trajectory trajectory;  // start/end are swapped at random per utterance
};

struct ManifestEntry {
  std::string id;
  uint64_t seed = 0;
  double snr_db = 0.0;
  double snr_b1_db = 0.0;
  std::string b0, b1, s0;  // paths relative to the manifest directory
  std::string source;      // clean corpus file name
  std::optional<SceneGeometry> scene;
  std::string rir;  // sidecar path relative to the manifest directory
  int speech_delay = 0;
  std::optional<Trajectory> trajectory;
};

struct DatasetManifest {
  int version = kManifestVersion;
  Condition condition = Condition::kNoReverb;
  std::string split;
  uint64_t seed = 0;
  StftConfig stft;
  std::vector<ManifestEntry> entries;
  std::filesystem::path dir;  // not serialized
};

inline nlohmann::json StftToJson(const StftConfig& c) {
  return {{"frame_len", c.frame_len}, {"hop", c.hop}, {"fft_size", c.fft_size}, {"window", "hann"}};
}

inline nlohmann::json ManifestToJson(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j = {
        {"id", e.id},
        {"seed", e.seed},
        {"snr_db", e.snr_db},
        {"snr_b1_db", e.snr_b1_db},
        {"files", {{"b0", e.b0}, {"b1", e.b1}, {"s0", e.s0}}},
        {"source", e.source},
        {"speech_delay", e.speech_delay},
        {"scene", e.scene ? SceneToJson(*e.scene) : nlohmann::json(nullptr)},
        {"rir", e.rir.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.rir)},
    };
    if (e.trajectory) {
      j["trajectory"] = {{"start_dist", e.trajectory->start_dist},
                         {"end_dist", e.trajectory->end_dist},
                         {"speed_kmh", e.trajectory->speed_kmh},
                         {"ref_dist", e.trajectory->ref_dist}};
    } else {
      j["trajectory"] = nullptr;
    }
    entries.push_back(std::move(j));
  }
  return {{"version", m.version},
          {"condition", ConditionName(m.condition)},
          {"split", m.split},
          {"seed", m.seed},
          {"stft", StftToJson(m.stft)},
          {"entries", std::move(entries)}};
}

inline DatasetManifest ManifestFromJson(const nlohmann::json& j) {
  DatasetManifest m;
  m.version = j.at("version");
  if (m.version != kManifestVersion) {
    throw Error("unsupported manifest version " + std::to_string(m.version));
  }
  m.condition = ParseCondition(j.at("condition").get<std::string>());
  m.split = j.at("split");
  m.seed = j.at("seed");
  const auto& s = j.at("stft");
  m.stft.frame_len = s.at("frame_len");
  m.stft.hop = s.at("hop");
  m.stft.fft_size = s.at("fft_size");
  m.stft.Validate();
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id");
    e.seed = je.at("seed");
    e.snr_db = je.at("snr_db");
    e.snr_b1_db = je.at("snr_b1_db");
    e.b0 = je.at("files").at("b0");
    e.b1 = je.at("files").at("b1");
    e.s0 = je.at("files").at("s0");
    e.source = je.at("source");
    e.speech_delay = je.at("speech_delay");
    if (!je.at("scene").is_null()) e.scene = SceneFromJson(je.at("scene"));
    if (!je.at("rir").is_null()) e.rir = je.at("rir");
    if (!je.at("trajectory").is_null()) {
      const auto& t = je.at("trajectory");
      e.trajectory = Trajectory{t.at("start_dist"), t.at("end_dist"), t.at("speed_kmh"),
                                t.at("ref_dist")};
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void SaveManifest(const DatasetManifest& m, const std::filesystem::path& path) {
  internal::WriteBytes(path, ManifestToJson(m).dump(2) + "\n");
}

inline DatasetManifest LoadManifest(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  DatasetManifest m;
  try {
    m = ManifestFromJson(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": malformed manifest: " + e.what());
  }
  m.dir = path.parent_path();
  return m;
}

struct LoadedUtterance {
  SampleBuffer b0, b1, s0;
};

inline LoadedUtterance LoadEntry(const DatasetManifest& m, const ManifestEntry& e) {
  return {ReadWav(m.dir / e.b0), ReadWav(m.dir / e.b1), ReadWav(m.dir / e.s0)};
}

// Throws with every missing file listed.
inline void CheckFilesExist(const std::vector<std::filesystem::path>& paths) {
  std::string missing;
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) missing += (missing.empty() ? "" : ", ") + p.string();
  }
  if (!missing.empty()) throw Error("missing files: " + missing);
}

inline void CheckManifestFiles(const DatasetManifest& m) {
  std::vector<std::filesystem::path> paths;
  for (const auto& e : m.entries) {
    for (const std::string* f : {&e.b0, &e.b1, &e.s0}) paths.push_back(m.dir / *f);
  }
  CheckFilesExist(paths);
}

inline std::vector<std::filesystem::path> ListWavFiles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Generates one split from <corpus_dir>/<split>/*.wav and the noise file.
// Every random choice is derived from (seed, split, utterance index).
inline DatasetManifest BuildDataset(const std::filesystem::path& corpus_dir,
                                    const std::filesystem::path& noise_path,
                                    Condition condition, const std::string& split,
                                    uint64_t seed, const std::filesystem::path& out_dir,
                                    const DatagenOptions& opt = {}) {
  namespace fs = std::filesystem;
  const fs::path split_dir = corpus_dir / split;
  const std::vector<fs::path> clean_files = ListWavFiles(split_dir);
  if (clean_files.empty()) {
    CheckFilesExist({split_dir, noise_path});
    throw Error("no .wav files in " + split_dir.string());
  }
  CheckFilesExist({noise_path});
  const SampleBuffer noise = ReadWav(noise_path);

  DatasetManifest m;
  m.condition = condition;
  m.split = split;
  m.seed = seed;
  m.dir = out_dir / split;
  fs::create_directories(m.dir);

  std::optional<RirQuadruple> matched;
  std::string matched_ref;
  std::optional<SceneGeometry> matched_scene;
  if (condition == Condition::kRirMatched) {
    SceneConstraints mean = opt.constraints;
    mean.jitter = false;
    matched_scene = SampleScene(0, opt.nominal_room, mean, opt.mic_offsets);
    matched = RenderQuadruple(*matched_scene);
    fs::create_directories(out_dir / "rirs");
    WriteQuadruple(out_dir / "rirs", "matched", *matched, *matched_scene, 0);
    matched_ref = "../rirs/matched.json";
  }

  const uint64_t split_seed = DeriveSeed(seed, split);
  for (size_t i = 0; i < clean_files.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "%s%04zu", split.c_str(), i);
    ManifestEntry e;
    e.id = id;
    e.seed = DeriveSeed(split_seed, static_cast<uint64_t>(i));
    e.source = clean_files[i].filename().string();
    const SampleBuffer clean = ReadWav(clean_files[i]);
    if (noise.size() < clean.size()) {
      throw Error("noise file shorter than " + clean_files[i].string());
    }
    Rng rng(DeriveSeed(e.seed, "noise-offset"));
    const size_t offset = rng.UniformInt(noise.size() - clean.size() + 1);
    const SampleBuffer noise_seg(std::vector<double>(
        noise.samples.begin() + offset, noise.samples.begin() + offset + clean.size()));
    const MixSpec spec = DrawMixSpec(e.seed, condition, opt.snr_min, opt.snr_max);
    e.snr_db = spec.snr_b0;
    e.snr_b1_db = spec.snr_b1();

    UtterancePair pair;
    switch (condition) {
      case Condition::kNoReverb:
        pair = MixNoReverb(clean, noise_seg, spec);
        break;
      case Condition::kRirMatched:
        pair = MixReverberant(clean, noise_seg, *matched, spec);
        e.scene = matched_scene;
        e.rir = matched_ref;
        e.speech_delay = matched->speech_delay;
        break;
      case Condition::kRirMulticondition: {
        const uint64_t scene_seed = DeriveSeed(e.seed, "scene");
        const SceneGeometry scene =
            SampleScene(scene_seed, opt.nominal_room, opt.constraints, opt.mic_offsets);
        const RirQuadruple quad = RenderQuadruple(scene);
        fs::create_directories(m.dir / "rirs");
        WriteQuadruple(m.dir / "rirs", e.id, quad, scene, scene_seed);
        pair = MixReverberant(clean, noise_seg, quad, spec);
        e.scene = scene;
        e.rir = "rirs/" + e.id + ".json";
        e.speech_delay = quad.speech_delay;
        break;
      }
      case Condition::kTimeVaryingSnr: {
        Trajectory t = opt.trajectory;
        if (Rng(DeriveSeed(e.seed, "direction")).Uniform() < 0.5) {
          std::swap(t.start_dist, t.end_dist);
        }
        pair = MixTimeVarying(clean, noise_seg, t, spec);
        e.trajectory = t;
        break;
      }
    }
    e.b0 = e.id + ".b0.wav";
    e.b1 = e.id + ".b1.wav";
    e.s0 = e.id + ".s0.wav";
    WriteWavPcm16(m.dir / e.b0, pair.b0);
    WriteWavPcm16(m.dir / e.b1, pair.b1);
    WriteWavPcm16(m.dir / e.s0, AlignLength(pair.s0_ref, pair.b0.size()));
    m.entries.push_back(std::move(e));
  }
  SaveManifest(m, m.dir / "manifest.json");
  return m;
}

}  // namespace beamsep
