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

#include "fixedhead/optim.hpp"

#include "fixedhead/errors.hpp"

namespace fixedhead {

void sgd_step(std::span<Parameter* const> params, const SgdOptions& opts) {
  for (Parameter* p : params) {
    if (p->trainable && !p->value.has_grad()) {
      throw ContractError("sgd_step: trainable parameter '" + p->name + "' has no gradient");
    }
  }
  for (Parameter* p : params) {
    if (!p->trainable) {
      p->value.clear_grad();
      continue;
    }
    auto value = p->value.data();
    auto grad = p->value.grad();
    if (!p->momentum) p->momentum.emplace(value.size(), 0.0);
    auto& v = *p->momentum;
    for (std::size_t i = 0; i < value.size(); ++i) {
      v[i] = opts.momentum * v[i] + grad[i] + opts.weight_decay * value[i];
      value[i] -= opts.lr * v[i];
    }
    p->value.zero_grad();
  }
}

}  // namespace fixedhead
