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

// Batch evaluation over a manifest: enhanced and unprocessed-b0 metrics
// against s0, JSON report and a fixed-width text table.

#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "beamsep/dataset.hpp"
#include "beamsep/enhance.hpp"
#include "beamsep/metrics.hpp"

namespace beamsep {

inline constexpr int kReportVersion = 1;

struct UtteranceScores {
  std::string id;
  double log_mse = 0;     // linear
  double log_mse_db = 0;
  double si_sdr_db = 0;
  double seg_snr_db = 0;
};

struct ScoreSummary {
  int count = 0;
  double log_mse = 0;
  double log_mse_db = 0;
  double si_sdr_db = 0;
  double seg_snr_db = 0;
};

inline ScoreSummary Summarize(const std::vector<UtteranceScores>& v) {
  ScoreSummary s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  for (const auto& u : v) {
    s.log_mse += u.log_mse;
    s.log_mse_db += u.log_mse_db;
    s.si_sdr_db += u.si_sdr_db;
    s.seg_snr_db += u.seg_snr_db;
  }
  s.log_mse /= s.count;
  s.log_mse_db /= s.count;
  s.si_sdr_db /= s.count;
  s.seg_snr_db /= s.count;
  return s;
}

inline UtteranceScores ScoreUtterance(const std::string& id, const SampleBuffer& est,
                                      const SampleBuffer& ref, const StftConfig& stft) {
  UtteranceScores s;
  s.id = id;
  const Eigen::MatrixXd e = Stft(est, stft).Magnitude().magnitude();
  const Eigen::MatrixXd r = Stft(ref, stft).Magnitude().magnitude();
  s.log_mse = SpectralLogMseLinear(e, r);
  s.log_mse_db = SpectralLogMse(e, r);
  s.si_sdr_db = SiSdr(est, ref);
  s.seg_snr_db = SegmentalSnr(est, ref);
  return s;
}

struct EvalRow {
  std::string condition;
  int window_frames = 160;
  std::string fusion;
  std::string input_mode;
  bool wpe = false;
  std::vector<std::string> models;
  std::vector<UtteranceScores> enhanced, baseline;  // ordered by utterance id

  ScoreSummary enhanced_summary() const { return Summarize(enhanced); }
  ScoreSummary baseline_summary() const { return Summarize(baseline); }
};

struct EvalOptions {
  int window_frames = 160;
  std::optional<WpeConfig> wpe;
};

// Scores every utterance with each estimator and averages the per-utterance
// metrics over estimators (repeated trainings). The baseline is b0 passed
// through the same analysis/synthesis path.
inline EvalRow EvaluateManifest(const DatasetManifest& m, const std::vector<WindowEstimator>& estimators,
                                const EvalOptions& opt) {
  if (estimators.empty()) throw Error("no models to evaluate");
  if (m.entries.empty()) throw Error("empty manifest");
  CheckManifestFiles(m);
  EvalRow row;
  row.condition = ConditionName(m.condition);
  row.window_frames = opt.window_frames;
  row.wpe = opt.wpe.has_value();
  std::vector<const ManifestEntry*> entries;
  for (const auto& e : m.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry* a, const ManifestEntry* b) { return a->id < b->id; });
  EnhanceOptions eo{m.stft, opt.window_frames, opt.wpe};
  EnhanceOptions base_opt{m.stft, opt.window_frames, std::nullopt};
  for (const ManifestEntry* e : entries) {
    const LoadedUtterance u = LoadEntry(m, *e);
    const SampleBuffer ref = AlignLength(u.s0, u.b0.size());
    UtteranceScores avg;
    avg.id = e->id;
    for (const auto& est : estimators) {
      const UtteranceScores s = ScoreUtterance(e->id, Enhance(u.b0, u.b1, est, eo), ref, m.stft);
      avg.log_mse += s.log_mse / estimators.size();
      avg.log_mse_db += s.log_mse_db / estimators.size();
      avg.si_sdr_db += s.si_sdr_db / estimators.size();
      avg.seg_snr_db += s.seg_snr_db / estimators.size();
    }
    row.enhanced.push_back(avg);
    row.baseline.push_back(
        ScoreUtterance(e->id, Enhance(u.b0, u.b1, IdentityEstimator(), base_opt), ref, m.stft));
  }
  return row;
}

inline nlohmann::json SummaryToJson(const ScoreSummary& s) {
  return {{"count", s.count},
          {"spectral_log_mse", s.log_mse},
          {"spectral_log_mse_db", s.log_mse_db},
          {"si_sdr_db", s.si_sdr_db},
          {"segmental_snr_db", s.seg_snr_db}};
}

inline nlohmann::json ScoresToJson(const UtteranceScores& s) {
  return {{"id", s.id},
          {"spectral_log_mse", s.log_mse},
          {"spectral_log_mse_db", s.log_mse_db},
          {"si_sdr_db", s.si_sdr_db},
          {"segmental_snr_db", s.seg_snr_db}};
}

inline nlohmann::json ReportToJson(const std::string& dataset, const std::string& split,
                                   const std::vector<EvalRow>& rows) {
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json utts = nlohmann::json::array();
    for (size_t i = 0; i < r.enhanced.size(); ++i) {
      utts.push_back({{"id", r.enhanced[i].id},
                      {"enhanced", ScoresToJson(r.enhanced[i])},
                      {"baseline", ScoresToJson(r.baseline[i])}});
    }
    jr.push_back({{"condition", r.condition},
                  {"window_frames", r.window_frames},
                  {"fusion", r.fusion},
                  {"input_mode", r.input_mode},
                  {"wpe", r.wpe},
                  {"models", r.models},
                  {"enhanced", SummaryToJson(r.enhanced_summary())},
                  {"baseline", SummaryToJson(r.baseline_summary())},
                  {"utterances", utts}});
  }
  return {{"version", kReportVersion},
          {"dataset", dataset},
          {"split", split},
          {"wer", nullptr},
          {"rows", jr}};
}

inline std::string ReportTable(const std::vector<EvalRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %6s %-7s %-8s %-4s %4s %17s %17s %17s\n", "condition",
                "window", "fusion", "input", "wpe", "n", "logmse_dB enh/b0", "si_sdr enh/b0",
                "segsnr enh/b0");
  out += line;
  for (const auto& r : rows) {
    const ScoreSummary e = r.enhanced_summary();
    const ScoreSummary b = r.baseline_summary();
    std::snprintf(line, sizeof(line),
                  "%-18s %6d %-7s %-8s %-4s %4d %8.2f/%-8.2f %8.2f/%-8.2f %8.2f/%-8.2f\n",
                  r.condition.c_str(), r.window_frames, r.fusion.c_str(), r.input_mode.c_str(),
                  r.wpe ? "yes" : "no", e.count, e.log_mse_db, b.log_mse_db, e.si_sdr_db,
                  b.si_sdr_db, e.seg_snr_db, b.seg_snr_db);
    out += line;
  }
  return out;
}

}  // namespace beamsep
