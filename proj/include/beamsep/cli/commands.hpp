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

// The `beamsep` command line: datagen, train, enhance, eval, beampattern, rir.
// Exit codes: 0 ok, 1 runtime failure, 2 usage error. Failures print one
// line, "error: <message>", on stderr.

#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "beamsep/beamforming.hpp"
#include "beamsep/cli/config.hpp"
#include "beamsep/dataset.hpp"
#include "beamsep/enhance.hpp"
#include "beamsep/evaluate.hpp"
#include "beamsep/features.hpp"
#include "beamsep/nn/serialize.hpp"
#include "beamsep/nn/train.hpp"
#include "beamsep/room.hpp"
#include "beamsep/synth.hpp"
#include "beamsep/wav.hpp"

namespace beamsep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace fs = std::filesystem;

struct GlobalArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

inline void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  beamsep::internal::WriteBytes(path, text);
}

inline fs::path Sidecar(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.filename().string() + suffix);
}

inline RunConfig BuildConfig(const GlobalArgs& g) {
  RunConfig cfg;
  if (!g.config.empty()) cfg.MergeFile(g.config);
  if (g.seed) cfg.Set("seed", *g.seed);
  if (g.threads) {
    if (*g.threads < 1) throw UsageError("--threads must be >= 1");
    cfg.Set("threads", *g.threads);
  }
  return cfg;
}

inline void RequireOut(const GlobalArgs& g) {
  if (g.out.empty()) throw UsageError("--out is required");
}

// ---- datagen ---------------------------------------------------------------

struct DatagenArgs {
  std::string corpus, noise, condition;
  bool synthetic = false;
  std::optional<double> snr_min, snr_max;
};

inline void CmdDatagen(const GlobalArgs& g, const DatagenArgs& a) {
  RequireOut(g);
  RunConfig cfg = BuildConfig(g);
  if (!a.condition.empty()) cfg.Set("datagen.condition", ConditionName(ParseCondition(a.condition)));
  if (a.snr_min) cfg.Set("datagen.snr_min", *a.snr_min);
  if (a.snr_max) cfg.Set("datagen.snr_max", *a.snr_max);
  if (a.synthetic == !a.corpus.empty()) {
    throw UsageError("exactly one of --corpus or --synthetic-corpus is required");
  }
  const fs::path out = g.out;
  fs::create_directories(out);
  fs::path corpus = a.corpus;
  fs::path noise = a.noise;
  if (a.synthetic) {
    corpus = out / "corpus";
    WriteSyntheticCorpus(corpus, DeriveSeed(cfg.seed(), "corpus"), cfg.synthetic());
  }
  if (noise.empty()) noise = corpus / "noise.wav";
  const Condition condition = ParseCondition(cfg.at("datagen.condition"));
  const DatagenOptions opt = cfg.datagen();
  for (const auto& split : cfg.at("datagen.splits")) {
    const DatasetManifest m =
        BuildDataset(corpus, noise, condition, split.get<std::string>(), cfg.seed(), out, opt);
    std::cout << "datagen: " << m.split << ": " << m.entries.size() << " utterances ("
              << ConditionName(condition) << ")\n";
  }
  WriteText(out / "config-lock.json", cfg.Lock());
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::optional<int> window, epochs, repeats, batch_size;
  std::optional<double> lr;
  std::string fusion, input_mode;
  bool log_features = false;
  bool wpe = false;
};

inline fs::path RepeatPath(const fs::path& out, int k) {
  if (k == 0) return out;
  return out.parent_path() /
         (out.stem().string() + ".r" + std::to_string(k) + out.extension().string());
}

inline DatasetManifest LoadSplit(const fs::path& dataset, const std::string& split) {
  const fs::path p = dataset / split / "manifest.json";
  CheckFilesExist({p});
  return LoadManifest(p);
}

inline void CmdTrain(const GlobalArgs& g, const TrainArgs& a) {
  RequireOut(g);
  if (a.dataset.empty()) throw UsageError("--dataset is required");
  RunConfig cfg = BuildConfig(g);
  if (a.window) cfg.Set("train.window", *a.window);
  if (a.epochs) cfg.Set("train.max_epochs", *a.epochs);
  if (a.repeats) cfg.Set("train.repeats", *a.repeats);
  if (a.batch_size) cfg.Set("train.batch_size", *a.batch_size);
  if (a.lr) cfg.Set("train.learning_rate", *a.lr);
  if (!a.fusion.empty()) cfg.Set("train.fusion", a.fusion);
  if (!a.input_mode.empty()) cfg.Set("train.input_mode", a.input_mode);
  if (a.log_features) cfg.Set("train.log_features", true);
  if (a.wpe) cfg.Set("wpe.enabled", true);
  nn::TrainConfig tc;
  try {
    tc = cfg.train();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto wpe = cfg.wpe();
  const DatasetManifest train_m = LoadSplit(a.dataset, "train");
  const DatasetManifest dev_m = LoadSplit(a.dataset, "dev");
  const WindowSet train = LoadWindows(train_m, tc.window_frames, wpe);
  const WindowSet dev = LoadWindows(dev_m, tc.window_frames, wpe);
  std::cerr << "train: " << train.size() << " train / " << dev.size() << " dev windows of "
            << tc.window_frames << " frames\n";

  const fs::path out = g.out;
  nlohmann::json history = nlohmann::json::array();
  double mean_best = 0;
  const int repeats = cfg.repeats();
  for (int k = 0; k < repeats; ++k) {
    nn::TrainConfig run = tc;
    run.seed = tc.seed + static_cast<uint64_t>(k);
    const nn::TrainResult r = nn::Train(train, dev, run, [&](const nn::EpochRecord& e) {
      std::fprintf(stderr, "train: seed %llu epoch %d train %.6g dev %.6g (%.1fs)\n",
                   static_cast<unsigned long long>(run.seed), e.epoch, e.train_loss, e.dev_loss,
                   e.seconds);
    });
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.history) {
      epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_loss", e.dev_loss}});
    }
    const fs::path path = RepeatPath(out, k);
    const nlohmann::json meta = {{"seed", run.seed},
                                 {"window_frames", run.window_frames},
                                 {"condition", ConditionName(train_m.condition)},
                                 {"wpe", wpe.has_value()},
                                 {"best_epoch", r.best_epoch},
                                 {"best_dev_loss", r.best_dev_loss}};
    nn::TcnModel<float> best = r.model;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    nn::SaveModel(best, path, meta);
    history.push_back({{"model", path.filename().string()},
                       {"seed", run.seed},
                       {"initial_dev_loss", r.initial_dev_loss},
                       {"best_epoch", r.best_epoch},
                       {"best_dev_loss", r.best_dev_loss},
                       {"epochs", epochs}});
    mean_best += r.best_dev_loss / repeats;
    std::cout << "train: wrote " << path.string() << " (best epoch " << r.best_epoch
              << ", dev loss " << r.best_dev_loss << ")\n";
  }
  if (repeats > 1) std::cout << "train: mean best dev loss over " << repeats << " seeds " << mean_best << "\n";
  WriteText(Sidecar(out, ".history.json"),
            nlohmann::json{{"runs", history}, {"mean_best_dev_loss", mean_best}}.dump(2) + "\n");
  WriteText(Sidecar(out, ".config-lock.json"), cfg.Lock());
}

// ---- enhance ---------------------------------------------------------------

struct EnhanceArgs {
  std::string model, b0, b1;
  std::optional<int> window;
  bool wpe = false;
};

inline int ModelWindow(const nn::LoadedModel& m, std::optional<int> override_window) {
  if (override_window) return *override_window;
  return m.metadata.value("window_frames", 160);
}

inline void CmdEnhance(const GlobalArgs& g, const EnhanceArgs& a) {
  RequireOut(g);
  if (a.model.empty()) throw UsageError("--model is required");
  if (a.b0.empty() || a.b1.empty()) throw UsageError("--b0 and --b1 are required");
  RunConfig cfg = BuildConfig(g);
  if (a.wpe) cfg.Set("wpe.enabled", true);
  CheckFilesExist({a.model, a.b0, a.b1});
  nn::LoadedModel lm = nn::LoadModel(a.model);
  const SampleBuffer b0 = ReadWav(a.b0);
  const SampleBuffer b1 = ReadWav(a.b1);
  const EnhanceOptions opt{cfg.stft(), ModelWindow(lm, a.window), cfg.wpe()};
  const SampleBuffer est = Enhance(b0, b1, ModelEstimator(lm.model), opt);
  const fs::path out = g.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  WriteWavPcm16(out, est);
  WriteText(Sidecar(out, ".config-lock.json"), cfg.Lock());
  std::cout << "enhance: wrote " << out.string() << " (" << est.size() << " samples)\n";
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string dataset, split = "test";
  std::vector<std::string> models;
  std::optional<int> window;
  bool wpe = false;
};

inline void CmdEval(const GlobalArgs& g, const EvalArgs& a) {
  RequireOut(g);
  if (a.dataset.empty()) throw UsageError("--dataset is required");
  if (a.models.empty()) throw UsageError("--model is required");
  RunConfig cfg = BuildConfig(g);
  if (a.wpe) cfg.Set("wpe.enabled", true);
  std::vector<fs::path> paths(a.models.begin(), a.models.end());
  CheckFilesExist(paths);
  const DatasetManifest m = LoadSplit(a.dataset, a.split);
  std::vector<nn::LoadedModel> models;
  for (const auto& p : paths) models.push_back(nn::LoadModel(p));

  // One row per (window, fusion, input mode); several models in a row are
  // repeated trainings and get averaged.
  using Key = std::tuple<int, std::string, std::string>;
  std::map<Key, std::vector<size_t>> groups;
  for (size_t i = 0; i < models.size(); ++i) {
    const Key k{ModelWindow(models[i], a.window), nn::FusionName(models[i].model.arch.fusion),
                nn::InputModeName(models[i].model.arch.input)};
    groups[k].push_back(i);
  }
  std::vector<EvalRow> rows;
  for (const auto& [key, idx] : groups) {
    std::vector<WindowEstimator> est;
    for (size_t i : idx) est.push_back(ModelEstimator(models[i].model));
    EvalRow row = EvaluateManifest(m, est, EvalOptions{std::get<0>(key), cfg.wpe()});
    row.fusion = std::get<1>(key);
    row.input_mode = std::get<2>(key);
    for (size_t i : idx) row.models.push_back(paths[i].filename().string());
    rows.push_back(std::move(row));
  }
  const fs::path out = g.out;
  const std::string table = ReportTable(rows);
  WriteText(out, ReportToJson(fs::path(a.dataset).filename().string(), a.split, rows).dump(2) + "\n");
  fs::path txt = out;
  txt.replace_extension(".txt");
  WriteText(txt, table);
  WriteText(Sidecar(out, ".config-lock.json"), cfg.Lock());
  std::cout << table;
}

// ---- beampattern -----------------------------------------------------------

struct BeampatternArgs {
  std::optional<double> look_deg, angle_step;
  std::vector<double> freqs;
};

inline void CmdBeampattern(const GlobalArgs& g, const BeampatternArgs& a) {
  RequireOut(g);
  RunConfig cfg = BuildConfig(g);
  if (a.look_deg) cfg.Set("beampattern.look_deg", *a.look_deg);
  if (a.angle_step) cfg.Set("beampattern.angle_step_deg", *a.angle_step);
  if (!a.freqs.empty()) cfg.Set("beampattern.freqs", a.freqs);
  const double step = cfg.at("beampattern.angle_step_deg");
  if (!(step > 0)) throw UsageError("--angle-step must be positive");
  BeamformerConfig bf;
  bf.look_aoi = cfg.at("beampattern.look_deg").get<double>() * kPi / 180.0;
  bf.Validate();
  std::vector<double> angles;
  for (int i = 0;; ++i) {
    const double ang = -90.0 + i * step;
    if (ang > 90.0 + 1e-9) break;
    angles.push_back(ang);
  }
  const auto freqs = cfg.at("beampattern.freqs").get<std::vector<double>>();
  std::string csv = "angle_deg,freq_hz,gain\n";
  char line[96];
  for (const auto& p : Beampattern(bf, angles, freqs)) {
    std::snprintf(line, sizeof(line), "%.6g,%.6g,%.9g\n", p.angle_deg, p.freq_hz, p.gain);
    csv += line;
  }
  const fs::path out = g.out;
  WriteText(out, csv);
  WriteText(Sidecar(out, ".config-lock.json"), cfg.Lock());
  std::cout << "beampattern: wrote " << out.string() << "\n";
}

// ---- rir -------------------------------------------------------------------

struct RirArgs {
  bool mean_scene = false;
};

inline void CmdRir(const GlobalArgs& g, const RirArgs& a) {
  RequireOut(g);
  RunConfig cfg = BuildConfig(g);
  DatagenOptions opt = cfg.datagen();
  if (a.mean_scene) opt.constraints.jitter = false;
  const uint64_t seed = cfg.seed();
  const SceneGeometry scene = SampleScene(seed, opt.nominal_room, opt.constraints, opt.mic_offsets);
  const RirQuadruple quad = RenderQuadruple(scene);
  const fs::path out = g.out;
  fs::create_directories(out);
  WriteQuadruple(out, "rir", quad, scene, seed);
  for (int i = 0; i < 4; ++i) {
    WriteWavFloat32(out / (std::string("rir.") + QuadrupleName(i) + ".wav"), quad.h[i].taps);
  }
  WriteText(out / "config-lock.json", cfg.Lock());
  std::cout << "rir: wrote " << (out / "rir.json").string() << " (" << quad.h[0].taps.size()
            << " taps, speech delay " << quad.speech_delay << ")\n";
}

// ---- entry point -----------------------------------------------------------

inline int Run(int argc, char** argv) {
  CLI::App app{"Two-beam TCN speech separation toolkit", "beamsep"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalArgs g;
  app.add_option("--config", g.config, "JSON config file layered over the defaults");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker cap (the library runs single-threaded)");
  app.add_option("--out", g.out, "Output file or directory");

  DatagenArgs da;
  auto* datagen = app.add_subcommand("datagen", "Generate a two-beam dataset");
  datagen->add_option("--corpus", da.corpus, "Clean corpus with train/dev/test subdirectories");
  datagen->add_option("--noise", da.noise, "Noise WAV (default <corpus>/noise.wav)");
  datagen->add_flag("--synthetic-corpus", da.synthetic, "Synthesize the bundled corpus first");
  datagen->add_option("--condition", da.condition,
                      "NoReverb | RirMatched | RirMulticondition | TimeVaryingSnr");
  datagen->add_option("--snr-min", da.snr_min);
  datagen->add_option("--snr-max", da.snr_max);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the separation network");
  train->add_option("--dataset", ta.dataset, "Dataset directory from datagen");
  train->add_option("--window", ta.window, "Analysis window in frames (160, 320, 640)");
  train->add_option("--fusion", ta.fusion, "cbp | concat");
  train->add_option("--input-mode", ta.input_mode, "both | b0_only | b1_only");
  train->add_option("--epochs", ta.epochs, "Maximum epochs");
  train->add_option("--repeats", ta.repeats, "Independent trainings with consecutive seeds");
  train->add_option("--batch-size", ta.batch_size);
  train->add_option("--lr", ta.lr, "Adam learning rate");
  train->add_flag("--log-features", ta.log_features, "Train on log(1 + magnitude)");
  train->add_flag("--wpe", ta.wpe, "Dereverberate beams with WPE before the network");

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Estimate the target from a beam pair");
  enhance->add_option("--model", ea.model, "Model file");
  enhance->add_option("--b0", ea.b0, "Beam steered at the target");
  enhance->add_option("--b1", ea.b1, "Beam steered at the interferer");
  enhance->add_option("--window", ea.window, "Override the model's analysis window");
  enhance->add_flag("--wpe", ea.wpe, "Dereverberate beams with WPE first");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Score models on a dataset split");
  eval->add_option("--dataset", va.dataset, "Dataset directory from datagen");
  eval->add_option("--split", va.split, "Split to score (default test)");
  eval->add_option("--model", va.models, "Model file (repeatable)");
  eval->add_option("--window", va.window, "Override the models' analysis window");
  eval->add_flag("--wpe", va.wpe, "Dereverberate beams with WPE first");

  BeampatternArgs ba;
  auto* beampattern = app.add_subcommand("beampattern", "Export the delay-and-sum beampattern as CSV");
  beampattern->add_option("--look-deg", ba.look_deg, "Look direction in degrees from broadside");
  beampattern->add_option("--angle-step", ba.angle_step, "Angle grid step in degrees");
  beampattern->add_option("--freqs", ba.freqs, "Frequencies in Hz")->delimiter(',');

  RirArgs ra;
  auto* rir = app.add_subcommand("rir", "Render an RIR quadruple for a sampled scene");
  rir->add_flag("--mean-scene", ra.mean_scene, "Nominal room and geometry, no jitter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return kExitOk;
    }
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    if (*datagen) CmdDatagen(g, da);
    if (*train) CmdTrain(g, ta);
    if (*enhance) CmdEnhance(g, ea);
    if (*eval) CmdEval(g, va);
    if (*beampattern) CmdBeampattern(g, ba);
    if (*rir) CmdRir(g, ra);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: " << msg << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace beamsep::cli
