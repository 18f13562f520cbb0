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

#include "fixedhead/init.hpp"

#include <cmath>

#include "fixedhead/errors.hpp"

namespace fixedhead {

Tensor he_normal(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw PreconditionError("he_normal: fan_in must be positive");
  Tensor t = randn(shape, rng);
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v *= std;
  return t;
}

}  // namespace fixedhead
