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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fixedhead/arch.hpp"
#include "fixedhead/autodiff.hpp"
#include "fixedhead/heads.hpp"
#include "fixedhead/ops.hpp"

namespace fixedhead {

struct ModelConfig {
  std::string preset = "tiny3";
  /// Output channels of the three blocks.
  std::vector<std::size_t> widths = {16, 32, 64};
  std::size_t input_channels = 1;
  std::size_t num_classes = 10;
  HeadKind head = HeadKind::Learned;
  std::uint64_t seed = 0;
};

// One conv3x3 (stride 2, padding 1, no bias) -> BatchNorm -> ReLU stage.
struct ConvBlock {
  Parameter weight;
  Parameter gamma;
  Parameter beta;
  BatchNormBuffers buffers;
};

struct ForwardResult {
  Var features;  // N x C x H' x W', the map entering global average pooling
  Var pooled;    // N x C
  Var logits;    // N x K
  std::vector<Var> relu_inputs;  // per block, the BatchNorm output before ReLU
};

// The "tiny3" network: three stride-2 conv blocks, global average pooling
// and a classifier head. With an identity head the last block is built with
// K output channels.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ForwardResult forward(Tape& tape, const Tensor& x, Mode mode);
  /// Every parameter, trainable or fixed, in a stable order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<ConvBlock>& blocks() { return blocks_; }
  const std::vector<ConvBlock>& blocks() const { return blocks_; }
  Head& head() { return head_; }
  const Head& head() const { return head_; }
  const HeadReport& head_report() const { return head_report_; }
  /// Channels entering global average pooling.
  std::size_t feature_dim() const { return blocks_.back().weight.value.shape()[0]; }
  /// The network in the architecture description format, for auditing.
  arch::ArchitectureSpec describe() const;

 private:
  ModelConfig cfg_;
  std::vector<ConvBlock> blocks_;
  Head head_;
  HeadReport head_report_;
};

/// Validates the config and initializes a model from cfg.seed. Throws
/// ConfigError for an unknown preset or empty widths and DimensionError when
/// an identity head asks for more classes than the preset's final width.
Model build_model(const ModelConfig& cfg);

/// Index of the largest logit per row (first one on ties).
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace fixedhead
