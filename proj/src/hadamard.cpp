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

#include "fixedhead/hadamard.hpp"

#include <algorithm>
#include <string>

#include "fixedhead/errors.hpp"

namespace fixedhead {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

IntMatrix hadamard_matrix(std::size_t order) {
  if (!is_power_of_two(order)) {
    throw InvalidOrderError("Hadamard order " + std::to_string(order) + " is not a power of two");
  }
  IntMatrix h{order, order, std::vector<std::int64_t>(order * order)};
  h(0, 0) = 1;
  // Grow the top-left block in place by doubling.
  for (std::size_t n = 1; n < order; n <<= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t v = h(i, j);
        h(i, j + n) = v;
        h(i + n, j) = v;
        h(i + n, j + n) = -v;
      }
    }
  }
  return h;
}

std::size_t hadamard_order_for(std::size_t n_c, std::size_t num_classes) {
  return next_power_of_two(std::max(n_c, num_classes));
}

IntMatrix transpose(const IntMatrix& m) {
  IntMatrix t{m.cols, m.rows, std::vector<std::int64_t>(m.data.size())};
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols != b.rows) throw ShapeError("integer matmul: inner dimensions differ");
  IntMatrix c{a.rows, b.cols, std::vector<std::int64_t>(a.rows * b.cols, 0)};
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const std::int64_t av = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += av * b(k, j);
    }
  return c;
}

}  // namespace fixedhead
