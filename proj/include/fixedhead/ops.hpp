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

#include <optional>
#include <span>
#include <vector>

#include "fixedhead/autodiff.hpp"

// Differentiable operations. Every function records a node on the tape of
// its operands; backward rules are documented next to each op.
namespace fixedhead {

enum class Mode { Train, Infer };

/// [m x k] * [k x n]. Backward: dA = dY B^T, dB = A^T dY.
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
/// x[N x K] + b[K] broadcast over rows.
Var add_bias(Var x, Var bias);
/// s * x where s is a one-element tensor.
Var scale(Var x, Var s);
/// ReLU with gradient 0 at exactly 0.
Var relu(Var x);
/// Sum of all elements as a one-element tensor.
Var sum(Var x);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};

/// Output spatial extent floor((in + 2*padding - kernel) / stride) + 1.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

/// Grouped 2-D convolution over x[N x Cin x H x W] with w[Cout x Cin/g x kh x kw].
Var conv2d(Var x, Var w, std::optional<Var> bias, Conv2dOptions opts = {});

struct BatchNormBuffers {
  std::vector<double> running_mean;
  std::vector<double> running_var;

  explicit BatchNormBuffers(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalization of x[N x C x H x W]. Train mode uses batch
/// statistics and updates the running buffers (unbiased variance); Infer mode
/// uses the running buffers.
Var batchnorm2d(Var x, Var gamma, Var beta, BatchNormBuffers& buffers, Mode mode,
                BatchNormOptions opts = {});

/// Mean of a contiguous spatial map, summed left to right. Shared with the
/// heatmap exporter so channel means and logits agree bit for bit.
double spatial_mean(std::span<const double> map);

/// x[N x C x H x W] -> [N x C].
Var global_avg_pool(Var x);

/// Mean over the batch of -log softmax(logits)[target].
Var softmax_cross_entropy(Var logits, std::span<const int> targets);

}  // namespace fixedhead
