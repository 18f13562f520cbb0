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

#include <span>

#include "fixedhead/autodiff.hpp"

namespace fixedhead {

struct SgdOptions {
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

/// Heavy-ball SGD:
///   v <- momentum * v + grad + weight_decay * value
///   value <- value - lr * v
/// Non-trainable parameters are never written. All gradients are cleared
/// afterwards. Throws ContractError if a trainable parameter has no gradient.
void sgd_step(std::span<Parameter* const> params, const SgdOptions& opts);

}  // namespace fixedhead
