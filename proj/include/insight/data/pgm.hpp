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

// Binary (P5) 8-bit PGM images: ground-truth masks and exported heatmaps.

#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "insight/data/bag.hpp"
#include "insight/util/file_io.hpp"

namespace insight {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

inline std::string encode_pgm(const GrayImage& img) {
  if (img.pixels.size() != img.height * img.width) throw DimensionError("encode_pgm: pixel count != width*height");
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

inline GrayImage decode_pgm(std::string_view bytes, const std::string& context = "PGM") {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> void { throw FormatError(context + ": " + what, pos); };
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") fail("not a binary PGM (expected P5)");
  pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) fail("malformed header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 24)) fail("header value too large");
      ++pos;
    }
    return v;
  };
  GrayImage img;
  img.width = number();
  img.height = number();
  const std::size_t maxval = number();
  if (img.width == 0 || img.height == 0) fail("zero image extent");
  if (maxval != 255) fail("only 8-bit PGM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) fail("missing header terminator");
  ++pos;
  if (bytes.size() - pos != img.width * img.height) {
    fail("payload has " + std::to_string(bytes.size() - pos) + " bytes, header declares " +
         std::to_string(img.width * img.height));
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_file_atomic(path, encode_pgm(img)); }

inline GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path), path.string()); }

/// Masks are stored as 0 (background) / 255 (lesion).
inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  GrayImage img{mask.height, mask.width, {}};
  img.pixels.reserve(mask.data.size());
  for (auto v : mask.data) img.pixels.push_back(v ? 255 : 0);
  write_pgm(path, img);
}

inline BinaryMask read_mask(const std::filesystem::path& path) {
  const GrayImage img = read_pgm(path);
  BinaryMask m(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (img.pixels[i] != 0 && img.pixels[i] != 255) {
      throw FormatError(path.string() + ": mask pixels must be 0 or 255");
    }
    m.data[i] = img.pixels[i] ? 1 : 0;
  }
  return m;
}

}  // namespace insight
