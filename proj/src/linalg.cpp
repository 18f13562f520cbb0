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

#include "fixedhead/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fixedhead/errors.hpp"
#include "gemm.hpp"

namespace fixedhead::linalg {

namespace {
void require_matrix(const Tensor& a, const char* what) {
  if (a.rank() != 2) throw ShapeError(std::string(what) + ": expected a matrix, got " + shape_string(a.shape()));
}
}  // namespace

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  require_matrix(a, "multiply");
  require_matrix(b, "multiply");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("multiply: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  detail::gemm_nn(a.dim(0), b.dim(1), a.dim(1), a.data().data(), b.data().data(), c.data().data());
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Tensor block(const Tensor& a, std::size_t rows, std::size_t cols) {
  require_matrix(a, "block");
  if (rows > a.dim(0) || cols > a.dim(1)) throw ShapeError("block larger than matrix");
  Tensor b({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) b.at(i, j) = a.at(i, j);
  return b;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double determinant(Tensor a) {
  require_matrix(a, "determinant");
  const std::size_t n = a.dim(0);
  if (a.dim(1) != n) throw ShapeError("determinant: matrix is not square");
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a.at(i, k)) > std::abs(a.at(piv, k))) piv = i;
    if (a.at(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a.at(k, j), a.at(piv, j));
      det = -det;
    }
    det *= a.at(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a.at(i, k) / a.at(k, k);
      for (std::size_t j = k; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
    }
  }
  return det;
}

QrResult householder_qr(const Tensor& a) {
  require_matrix(a, "householder_qr");
  const std::size_t n = a.dim(0);
  if (a.dim(1) != n) throw ShapeError("householder_qr: matrix must be square, got " + shape_string(a.shape()));

  Tensor r = a;
  r.clear_grad();
  Tensor q = identity(n);
  std::vector<double> v(n);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += r.at(i, k) * r.at(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    // alpha takes the sign opposite to the pivot to avoid cancellation.
    const double alpha = r.at(k, k) > 0.0 ? -norm : norm;
    double vnorm = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = r.at(i, k) - (i == k ? alpha : 0.0);
      vnorm += v[i] * v[i];
    }
    if (vnorm == 0.0) continue;
    vnorm = std::sqrt(vnorm);
    for (std::size_t i = k; i < n; ++i) v[i] /= vnorm;

    // R <- (I - 2vv^T) R on rows k..n-1.
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < n; ++i) dot += v[i] * r.at(i, j);
      for (std::size_t i = k; i < n; ++i) r.at(i, j) -= 2.0 * v[i] * dot;
    }
    // Q <- Q (I - 2vv^T) on columns k..n-1.
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = k; j < n; ++j) dot += q.at(i, j) * v[j];
      for (std::size_t j = k; j < n; ++j) q.at(i, j) -= 2.0 * dot * v[j];
    }
    for (std::size_t i = k + 1; i < n; ++i) r.at(i, k) = 0.0;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (r.at(i, i) < 0.0) {
      for (std::size_t j = 0; j < n; ++j) r.at(i, j) = -r.at(i, j);
      for (std::size_t j = 0; j < n; ++j) q.at(j, i) = -q.at(j, i);
    }
  }
  return {std::move(q), std::move(r)};
}

}  // namespace fixedhead::linalg
