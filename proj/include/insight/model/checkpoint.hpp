/*
 * Copyright 2026 The Insight Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// "INSM" checkpoint format (integers little-endian u32, reals f32):
//
//   magic "INSM" | version=1 | config_len | config JSON (compact, sorted keys)
//   tensor_count, then per tensor: name_len | name | rank | extents... | values
//
// Tensors appear in ModelParams::visit order and must match the shapes the
// stored configuration implies.

#include <cmath>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "insight/model/params.hpp"
#include "insight/util/binary_io.hpp"
#include "insight/util/file_io.hpp"

namespace insight {

inline constexpr char kCheckpointMagic[4] = {'I', 'N', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
};

template <Real T>
std::string encode_checkpoint(const ModelConfig& cfg, const ModelParams<T>& params) {
  ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  const std::string json = nlohmann::json(cfg).dump();
  w.u32(static_cast<std::uint32_t>(json.size()));
  w.bytes(json);
  std::uint32_t count = 0;
  params.visit([&](const std::string&, const GradPair<T>&) { ++count; });
  w.u32(count);
  params.visit([&](const std::string& name, const GradPair<T>& p) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (auto e : p.value.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (T v : p.value.data()) w.f32(static_cast<float>(v));
  });
  return w.take();
}

inline Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context = "INSM") {
  ByteReader r(bytes, context);
  if (r.bytes(4) != std::string_view(kCheckpointMagic, 4)) r.fail("bad magic (expected INSM)");
  if (const auto v = r.u32(); v != kCheckpointVersion) r.fail("unsupported version " + std::to_string(v));
  Checkpoint ck;
  const std::uint32_t len = r.u32();
  const auto json_text = r.bytes(len);
  try {
    ck.config = nlohmann::json::parse(json_text).get<ModelConfig>();
    ck.config.validate();
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad configuration block: ") + e.what());
  } catch (const ConfigError& e) {
    r.fail(std::string("bad configuration block: ") + e.what());
  }
  ck.params = ModelParams<float>(ck.config);
  std::uint32_t expected = 0;
  ck.params.visit([&](const std::string&, GradPair<float>&) { ++expected; });
  if (r.u32() != expected) r.fail("tensor count does not match configuration");
  ck.params.visit([&](const std::string& name, GradPair<float>& p) {
    const std::uint32_t nlen = r.u32();
    if (r.bytes(nlen) != name) r.fail("expected tensor '" + name + "'");
    const std::uint32_t rank = r.u32();
    if (rank != p.value.rank()) r.fail("rank mismatch for '" + name + "'");
    for (std::size_t i = 0; i < rank; ++i) {
      if (r.u32() != p.value.dim(i)) r.fail("extent mismatch for '" + name + "'");
    }
    for (auto& v : p.value.data()) {
      v = r.f32();
      if (!std::isfinite(v)) r.fail("non-finite value in '" + name + "'");
    }
  });
  if (!r.at_end()) r.fail("trailing bytes after checkpoint");
  return ck;
}

template <Real T>
void write_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg, const ModelParams<T>& params) {
  write_file_atomic(path, encode_checkpoint(cfg, params));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace insight
