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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace insight {

// Error hierarchy. Each family maps onto one CLI exit code (see cli/commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or channel counts disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (even kernel, p < 2, bad flag combination...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad argument to an otherwise valid call (empty input, label out of range).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed file. Carries the byte offset at which decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what), offset_(0) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Patch coordinates that do not form a valid grid subset.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The finite-difference oracle hit a non-finite function value.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Metric undefined for the given input (e.g. AUC with a single class).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace insight
