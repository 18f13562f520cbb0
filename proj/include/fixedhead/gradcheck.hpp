/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fixedhead/autodiff.hpp"

namespace fixedhead {

// Central finite differences against reverse-mode gradients. Relative error
// per coordinate is |a - n| / max(|a|, |n|, 1e-8).
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_name;  // parameter name for the multi-parameter check
  std::vector<double> analytic;
  std::vector<double> numeric;
};

double relative_error(double analytic, double numeric);

/// f maps a variable on some tape to a scalar on the same tape.
using ScalarFn = std::function<Var(Var)>;

GradCheckResult finite_diff_report(const ScalarFn& f, const Tensor& x, double step = 1e-3);

inline double finite_diff_check(const ScalarFn& f, const Tensor& x, double step = 1e-3) {
  return finite_diff_report(f, x, step).max_rel_error;
}

/// Builds a fresh tape per evaluation; the loss must bind `params` through
/// Tape::param. Every coordinate of every trainable parameter is perturbed.
using LossFn = std::function<Var(Tape&)>;

GradCheckResult finite_diff_report(const LossFn& loss, std::span<Parameter* const> params,
                                   double step = 1e-3);

}  // namespace fixedhead
