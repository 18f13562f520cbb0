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

// Plain (untaped) dense matrix helpers over rank-2 tensors.
namespace fixedhead::linalg {

Tensor identity(std::size_t n);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Top-left rows x cols block.
Tensor block(const Tensor& a, std::size_t rows, std::size_t cols);
/// max_ij |a_ij - b_ij|
double max_abs_diff(const Tensor& a, const Tensor& b);
/// Infinity norm as used for tolerances: max absolute entry.
double max_abs(const Tensor& a);
/// Determinant by Gaussian elimination with partial pivoting.
double determinant(Tensor a);

struct QrResult {
  Tensor q;
  Tensor r;
};

/// Householder QR of a square matrix. Reflections are sign-normalized so
/// diag(R) >= 0, which makes Q unique for nonsingular A.
QrResult householder_qr(const Tensor& a);

}  // namespace fixedhead::linalg
