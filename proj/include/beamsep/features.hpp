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

// Front end shared by training and enhancement: beam STFTs, optional
// whole-utterance WPE, and magnitude windows as float matrices.

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "beamsep/datagen.hpp"
#include "beamsep/dataset.hpp"
#include "beamsep/dsp.hpp"
#include "beamsep/nn/layers.hpp"
#include "beamsep/wpe.hpp"

namespace beamsep {

struct BeamSpectra {
  Spectrogram b0, b1;  // complex, from PaddedStft
};

inline BeamSpectra ComputeBeamSpectra(const SampleBuffer& b0, const SampleBuffer& b1,
                                      const StftConfig& stft,
                                      const std::optional<WpeConfig>& wpe = std::nullopt) {
  if (b0.size() != b1.size()) throw Error("beam signals differ in length");
  BeamSpectra s{PaddedStft(b0, stft), PaddedStft(b1, stft)};
  if (wpe) {
    auto [d0, d1] = WpePair(s.b0, s.b1, *wpe);
    s.b0 = std::move(d0);
    s.b1 = std::move(d1);
  }
  return s;
}

// Training examples in network precision.
struct WindowSet {
  nn::Batch<float> b0, b1, target;
  size_t size() const { return b0.size(); }
  void Append(const std::vector<AnalysisWindow>& windows) {
    for (const auto& w : windows) {
      b0.push_back(w.b0.cast<float>());
      b1.push_back(w.b1.cast<float>());
      target.push_back(w.target.cast<float>());
    }
  }
};

inline std::vector<AnalysisWindow> UtteranceWindows(const LoadedUtterance& u, const StftConfig& stft,
                                                    int window_frames,
                                                    const std::optional<WpeConfig>& wpe) {
  const BeamSpectra s = ComputeBeamSpectra(u.b0, u.b1, stft, wpe);
  const Spectrogram ref = PaddedStft(AlignLength(u.s0, u.b0.size()), stft);
  return SegmentSpectrograms(s.b0, s.b1, ref, window_frames);
}

inline WindowSet LoadWindows(const DatasetManifest& m, int window_frames,
                             const std::optional<WpeConfig>& wpe = std::nullopt) {
  CheckManifestFiles(m);
  WindowSet set;
  for (const auto& e : m.entries) {
    set.Append(UtteranceWindows(LoadEntry(m, e), m.stft, window_frames, wpe));
  }
  return set;
}

}  // namespace beamsep
