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

// Model file:
//
//   8 bytes   magic "BSEPTCN\0"
//   u32       format version
//   u32       header length n
//   n bytes   JSON header (architecture, sketch parameters, tensor table,
//             free-form metadata)
//   ...       float32 tensors in header order
//   u32       CRC-32 of everything above
//
// All integers and floats little-endian.

#pragma once

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/nn/model.hpp"
#include "beamsep/wav.hpp"

namespace beamsep::nn {

inline constexpr char kModelMagic[8] = {'B', 'S', 'E', 'P', 'T', 'C', 'N', '\0'};
inline constexpr uint32_t kModelVersion = 1;

inline nlohmann::json ArchitectureToJson(const Architecture& a) {
  return {{"channels", a.channels},
          {"dilations", a.dilations},
          {"sketch_dim", a.sketch_dim},
          {"out_block_dilation", a.out_block_dilation},
          {"fusion", FusionName(a.fusion)},
          {"input_mode", InputModeName(a.input)},
          {"log_features", a.log_features},
          {"bn_eps", a.bn_eps}};
}

inline Architecture ArchitectureFromJson(const nlohmann::json& j) {
  Architecture a;
  a.channels = j.at("channels");
  a.dilations = j.at("dilations").get<std::vector<int>>();
  a.sketch_dim = j.at("sketch_dim");
  a.out_block_dilation = j.at("out_block_dilation");
  a.fusion = ParseFusion(j.at("fusion"));
  a.input = ParseInputMode(j.at("input_mode"));
  a.log_features = j.at("log_features");
  a.bn_eps = j.at("bn_eps");
  return a;
}

inline nlohmann::json SketchToJson(const SketchParams& p) {
  return {{"d_out", p.d_out}, {"h", p.h}, {"s", p.s}};
}

inline SketchParams SketchFromJson(const nlohmann::json& j) {
  SketchParams p;
  p.d_out = j.at("d_out");
  p.h = j.at("h").get<std::vector<int>>();
  p.s = j.at("s").get<std::vector<int>>();
  p.Validate();
  return p;
}

struct LoadedModel {
  TcnModel<float> model;
  nlohmann::json metadata;
};

inline std::string EncodeModel(TcnModel<float>& m, const nlohmann::json& metadata = nlohmann::json::object()) {
  std::vector<TensorRef<float>> tensors = Parameters(m);
  for (auto& b : Buffers(m)) tensors.push_back(b);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& t : tensors) table.push_back({{"name", t.name}, {"size", t.size}});
  const nlohmann::json header = {{"architecture", ArchitectureToJson(m.arch)},
                                 {"sketch_u", SketchToJson(m.sketch_u)},
                                 {"sketch_w", SketchToJson(m.sketch_w)},
                                 {"tensors", table},
                                 {"metadata", metadata}};
  const std::string header_text = header.dump();
  std::string out(kModelMagic, sizeof(kModelMagic));
  beamsep::internal::PutU32(out, kModelVersion);
  beamsep::internal::PutU32(out, static_cast<uint32_t>(header_text.size()));
  out += header_text;
  for (const auto& t : tensors) {
    out.append(reinterpret_cast<const char*>(t.data), static_cast<size_t>(t.size) * sizeof(float));
  }
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size()));
  beamsep::internal::PutU32(out, static_cast<uint32_t>(crc));
  return out;
}

inline void SaveModel(TcnModel<float>& m, const std::filesystem::path& path,
                      const nlohmann::json& metadata = nlohmann::json::object()) {
  beamsep::internal::WriteBytes(path, EncodeModel(m, metadata));
}

inline LoadedModel DecodeModel(const std::vector<uint8_t>& bytes, const std::string& what) {
  auto fail = [&](const std::string& why) { return Error(what + ": " + why); };
  const size_t fixed = sizeof(kModelMagic) + 8;
  if (bytes.size() < sizeof(kModelMagic) || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw fail("not a model file");
  }
  if (bytes.size() < fixed + 4) throw fail("truncated file");
  const uint32_t version = beamsep::internal::ReadU32(bytes.data() + 8);
  if (version != kModelVersion) {
    throw fail("unsupported version " + std::to_string(version) + " (expected " +
               std::to_string(kModelVersion) + ")");
  }
  const uint32_t header_len = beamsep::internal::ReadU32(bytes.data() + 12);
  if (bytes.size() < fixed + header_len + 4) throw fail("truncated file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + fixed, bytes.begin() + fixed + header_len);
  } catch (const nlohmann::json::exception&) {
    throw fail("corrupt header");
  }
  LoadedModel out;
  size_t expected = 0;
  try {
    const Architecture arch = ArchitectureFromJson(header.at("architecture"));
    out.model = ZeroModel<float>(arch);
    out.model.sketch_u = SketchFromJson(header.at("sketch_u"));
    out.model.sketch_w = SketchFromJson(header.at("sketch_w"));
    out.metadata = header.at("metadata");
    for (const auto& t : header.at("tensors")) expected += t.at("size").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("corrupt header: ") + e.what());
  }
  if (out.model.sketch_u.d_in() != out.model.arch.channels ||
      out.model.sketch_w.d_in() != out.model.arch.channels ||
      out.model.sketch_u.d_out != out.model.arch.sketch_dim ||
      out.model.sketch_w.d_out != out.model.arch.sketch_dim) {
    throw fail("sketch parameters do not match the architecture");
  }
  const size_t total = fixed + header_len + expected * sizeof(float) + 4;
  if (bytes.size() < total) throw fail("truncated file");
  if (bytes.size() > total) throw fail("trailing bytes after checksum");
  const uint32_t stored = beamsep::internal::ReadU32(bytes.data() + total - 4);
  const uLong crc = crc32(0L, bytes.data(), static_cast<uInt>(total - 4));
  if (stored != static_cast<uint32_t>(crc)) throw fail("checksum mismatch");

  std::vector<TensorRef<float>> tensors = Parameters(out.model);
  for (auto& b : Buffers(out.model)) tensors.push_back(b);
  const auto& table = header.at("tensors");
  if (table.size() != tensors.size()) throw fail("tensor table does not match the architecture");
  size_t pos = fixed + header_len;
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (table[i].at("name") != tensors[i].name || table[i].at("size") != tensors[i].size) {
      throw fail("tensor table does not match the architecture at " + tensors[i].name);
    }
    const size_t n = static_cast<size_t>(tensors[i].size) * sizeof(float);
    std::memcpy(tensors[i].data, bytes.data() + pos, n);
    pos += n;
  }
  return out;
}

inline LoadedModel LoadModel(const std::filesystem::path& path) {
  return DecodeModel(ReadFileBytes(path), path.string());
}

}  // namespace beamsep::nn
