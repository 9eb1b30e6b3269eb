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

#include <cmath>
#include <functional>
#include <string>

#include "insight/tensor.hpp"

namespace insight {

/// Central-difference gradient estimate of a scalar function, one coordinate
/// at a time. Intended for double precision.
inline Tensor<double> finite_difference_gradient(const std::function<double(const Tensor<double>&)>& f,
                                                 const Tensor<double>& x, double eps) {
  Tensor<double> probe = x;
  Tensor<double> grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw OracleError("finite difference: non-finite function value at coordinate " +
                        std::to_string(i));
    }
    grad[i] = (fp - fm) / (2 * eps);
  }
  return grad;
}

/// Elementwise comparison used by every gradient check: an entry passes when
/// |a-b| <= abs_tol or |a-b| / max(|a|,|b|) < rel_tol.
struct GradCheckResult {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t failures = 0;
  std::size_t checked = 0;

  bool ok() const { return failures == 0; }
};

inline GradCheckResult compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                         double rel_tol = 1e-4, double abs_tol = 1e-8) {
  if (analytic.size() != numeric.size()) throw DimensionError("compare_gradients: length mismatch");
  GradCheckResult r;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double diff = std::abs(a - n);
    ++r.checked;
    r.max_abs_error = std::max(r.max_abs_error, diff);
    if (diff <= abs_tol) continue;
    const double rel = diff / std::max(std::abs(a), std::abs(n));
    r.max_rel_error = std::max(r.max_rel_error, rel);
    if (!(rel < rel_tol)) ++r.failures;
  }
  return r;
}

inline GradCheckResult merge(GradCheckResult a, const GradCheckResult& b) {
  a.max_rel_error = std::max(a.max_rel_error, b.max_rel_error);
  a.max_abs_error = std::max(a.max_abs_error, b.max_abs_error);
  a.failures += b.failures;
  a.checked += b.checked;
  return a;
}

}  // namespace insight
