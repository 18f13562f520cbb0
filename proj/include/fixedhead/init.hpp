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

#include "fixedhead/tensor.hpp"

namespace fixedhead {

/// Normal with std = sqrt(2 / fan_in), the initializer used for every
/// learned conv and fully connected weight.
Tensor he_normal(const Shape& shape, std::size_t fan_in, Rng& rng);

}  // namespace fixedhead
