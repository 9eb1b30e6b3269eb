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

// "IEB1" embedding-bag file format (all integers little-endian u32, reals f32):
//
//   magic "IEB1" | version=1 | id_len | id bytes
//   embed_dim | patch_h | patch_w | num_labels
//   label bits: ceil(num_labels/8) bytes, label c is bit (c % 8) of byte c / 8
//   patch_count, then per patch: row | col | embed_dim*patch_h*patch_w reals
//   mask flag (u8 0/1); if 1: height | width | num_labels planes of height*width bytes (0/1)
//
// Trailing bytes are an error.

#include <cmath>
#include <filesystem>
#include <string>

#include "insight/data/bag.hpp"
#include "insight/util/binary_io.hpp"
#include "insight/util/file_io.hpp"

namespace insight {

inline constexpr char kBagMagic[4] = {'I', 'E', 'B', '1'};
inline constexpr std::uint32_t kBagVersion = 1;

inline std::string encode_bag(const BagOfPatches& bag) {
  bag.validate();
  ByteWriter w;
  w.bytes(std::string_view(kBagMagic, 4));
  w.u32(kBagVersion);
  w.u32(static_cast<std::uint32_t>(bag.bag_id.size()));
  w.bytes(bag.bag_id);
  const std::size_t C = bag.num_labels();
  w.u32(static_cast<std::uint32_t>(bag.embed_dim()));
  w.u32(static_cast<std::uint32_t>(bag.patch_height()));
  w.u32(static_cast<std::uint32_t>(bag.patch_width()));
  w.u32(static_cast<std::uint32_t>(C));
  for (std::size_t byte = 0; byte < (C + 7) / 8; ++byte) {
    std::uint8_t bits = 0;
    for (std::size_t b = 0; b < 8 && byte * 8 + b < C; ++b) {
      if (bag.labels[byte * 8 + b]) bits |= static_cast<std::uint8_t>(1u << b);
    }
    w.u8(bits);
  }
  w.u32(static_cast<std::uint32_t>(bag.patches.size()));
  for (const auto& p : bag.patches) {
    w.u32(p.row);
    w.u32(p.col);
    for (float v : p.embedding.data()) w.f32(v);
  }
  w.u8(bag.has_masks() ? 1 : 0);
  if (bag.has_masks()) {
    w.u32(static_cast<std::uint32_t>(bag.masks.front().height));
    w.u32(static_cast<std::uint32_t>(bag.masks.front().width));
    for (const auto& m : bag.masks) {
      for (auto v : m.data) w.u8(v ? 1 : 0);
    }
  }
  return w.take();
}

inline BagOfPatches decode_bag(std::string_view bytes, const std::string& context = "IEB1") {
  ByteReader r(bytes, context);
  if (r.bytes(4) != std::string_view(kBagMagic, 4)) r.fail("bad magic (expected IEB1)");
  if (const auto v = r.u32(); v != kBagVersion) r.fail("unsupported version " + std::to_string(v));
  BagOfPatches bag;
  const std::uint32_t id_len = r.u32();
  bag.bag_id = std::string(r.bytes(id_len));
  const std::uint32_t dim = r.u32(), ph = r.u32(), pw = r.u32(), C = r.u32();
  if (dim == 0 || ph == 0 || pw == 0) r.fail("embedding extents must be positive");
  if (C == 0) r.fail("num_labels must be positive");
  bag.labels.assign(C, 0);
  for (std::size_t byte = 0; byte < (C + 7) / 8; ++byte) {
    const std::uint8_t bits = r.u8();
    for (std::size_t b = 0; b < 8; ++b) {
      const std::size_t c = byte * 8 + b;
      const bool set = (bits >> b) & 1u;
      if (c < C) {
        bag.labels[c] = set ? 1 : 0;
      } else if (set) {
        r.fail("label padding bits must be zero");
      }
    }
  }
  const std::uint32_t count = r.u32();
  if (count == 0) r.fail("bag has no patches");
  const std::uint64_t per_patch = 8 + 4ull * dim * ph * pw;
  if (per_patch * count > r.remaining()) r.fail("truncated patch block");
  for (std::uint32_t i = 0; i < count; ++i) {
    Patch p;
    p.row = r.u32();
    p.col = r.u32();
    std::vector<float> data(static_cast<std::size_t>(dim) * ph * pw);
    for (auto& v : data) {
      v = r.f32();
      if (!std::isfinite(v)) r.fail("non-finite embedding value");
    }
    p.embedding = Tensor<float>({dim, ph, pw}, std::move(data));
    bag.patches.push_back(std::move(p));
  }
  const std::uint8_t has_mask = r.u8();
  if (has_mask > 1) r.fail("mask flag must be 0 or 1");
  if (has_mask) {
    const std::uint32_t h = r.u32(), w = r.u32();
    if (static_cast<std::uint64_t>(h) * w * C > r.remaining()) r.fail("truncated mask block");
    for (std::uint32_t c = 0; c < C; ++c) {
      BinaryMask m(h, w);
      for (auto& v : m.data) {
        v = r.u8();
        if (v > 1) r.fail("mask bytes must be 0 or 1");
      }
      bag.masks.push_back(std::move(m));
    }
  }
  if (!r.at_end()) r.fail("trailing bytes after bag");
  try {
    bag.validate();
  } catch (const LayoutError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(context + ": " + e.what(), r.offset());
  }
  return bag;
}

inline void write_bag(const std::filesystem::path& path, const BagOfPatches& bag) {
  write_file_atomic(path, encode_bag(bag));
}

inline BagOfPatches read_bag(const std::filesystem::path& path) {
  return decode_bag(read_file(path), path.string());
}

}  // namespace insight
