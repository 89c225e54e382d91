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

// RIFF/WAVE reader and writers. Pipeline audio is 16-bit PCM, mono, 16 kHz;
// impulse responses may additionally be exported as 32-bit IEEE float.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/dsp.hpp"

namespace beamsep {

static_assert(std::endian::native == std::endian::little,
              "WAV and model I/O assume a little-endian host");

namespace internal {

inline uint32_t ReadU32(const uint8_t* p) {
  return uint32_t{p[0]} | uint32_t{p[1]} << 8 | uint32_t{p[2]} << 16 |
         uint32_t{p[3]} << 24;
}
inline uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

inline void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline std::string WavHeader(uint16_t format, uint16_t bits, uint32_t num_samples,
                             int sample_rate) {
  const uint32_t block = bits / 8;
  const uint32_t data_bytes = num_samples * block;
  std::string h;
  h += "RIFF";
  PutU32(h, 36 + data_bytes);
  h += "WAVEfmt ";
  PutU32(h, 16);
  PutU16(h, format);
  PutU16(h, 1);
  PutU32(h, static_cast<uint32_t>(sample_rate));
  PutU32(h, static_cast<uint32_t>(sample_rate) * block);
  PutU16(h, static_cast<uint16_t>(block));
  PutU16(h, bits);
  h += "data";
  PutU32(h, data_bytes);
  return h;
}

inline void WriteBytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace internal

inline std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

inline SampleBuffer DecodeWav(std::span<const uint8_t> bytes,
                              const std::string& name = "<memory>") {
  auto fail = [&](const std::string& why) -> Error {
    return Error(name + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  size_t pos = 12;
  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = internal::ReadU32(chunk + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) throw fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      format = internal::ReadU16(bytes.data() + body);
      channels = internal::ReadU16(bytes.data() + body + 2);
      rate = internal::ReadU32(bytes.data() + body + 4);
      bits = internal::ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      if (format != 1) {
        throw fail("unsupported format tag " + std::to_string(format) +
                   " (need PCM)");
      }
      if (channels != 1) {
        throw fail("unsupported channel count " + std::to_string(channels) +
                   " (need mono)");
      }
      if (rate != static_cast<uint32_t>(kSampleRate)) {
        throw fail("unsupported sample rate " + std::to_string(rate) +
                   " (need 16000)");
      }
      if (bits != 16) {
        throw fail("unsupported bit depth " + std::to_string(bits) +
                   " (need 16)");
      }
      const size_t n = size / 2;
      std::vector<double> samples(n);
      for (size_t i = 0; i < n; ++i) {
        const auto v = static_cast<int16_t>(internal::ReadU16(bytes.data() + body + 2 * i));
        samples[i] = v / 32768.0;
      }
      return SampleBuffer(std::move(samples));
    }
    pos = body + size + (size & 1);
  }
  throw fail("no data chunk");
}

inline SampleBuffer ReadWav(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return DecodeWav(bytes, path.string());
}

// Values are clamped to the 16-bit range and rounded to nearest.
inline std::string EncodeWavPcm16(const SampleBuffer& buffer) {
  std::string out = internal::WavHeader(1, 16, static_cast<uint32_t>(buffer.size()),
                                        buffer.sample_rate);
  for (double v : buffer.samples) {
    const double scaled = std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0);
    internal::PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(scaled)));
  }
  return out;
}

inline void WriteWavPcm16(const std::filesystem::path& path,
                          const SampleBuffer& buffer) {
  if (buffer.sample_rate != kSampleRate) throw Error("pipeline audio must be 16 kHz");
  CheckFinite(buffer.samples, "wav writer");
  internal::WriteBytes(path, EncodeWavPcm16(buffer));
}

inline void WriteWavFloat32(const std::filesystem::path& path,
                            std::span<const double> samples,
                            int sample_rate = kSampleRate) {
  std::string out = internal::WavHeader(3, 32, static_cast<uint32_t>(samples.size()),
                                        sample_rate);
  for (double v : samples) {
    internal::PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
  }
  internal::WriteBytes(path, out);
}

}  // namespace beamsep
