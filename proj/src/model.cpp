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


#include "fixedhead/model.hpp"

#include <string>

#include "fixedhead/errors.hpp"
#include "fixedhead/init.hpp"

namespace fixedhead {

namespace {

constexpr std::uint64_t kBlockStream = 1;
constexpr std::uint64_t kHeadStream = 2;

std::string block_name(std::size_t i) { return "block" + std::to_string(i); }

}  // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.preset != "tiny3") throw ConfigError("unknown model preset '" + cfg.preset + "'");
  if (cfg.widths.size() != 3) throw ConfigError("tiny3 needs exactly three widths");
  if (cfg.input_channels == 0) throw ConfigError("input_channels must be positive");
  if (cfg.num_classes < 2) throw ConfigError("at least two classes are required");
  for (std::size_t w : cfg.widths)
    if (w == 0) throw ConfigError("block widths must be positive");

  std::vector<std::size_t> widths = cfg.widths;
  if (cfg.head == HeadKind::FixedIdentity) {
    if (cfg.num_classes > widths.back()) {
      throw DimensionError("identity head with " + std::to_string(cfg.num_classes) +
                           " classes exceeds the final width " + std::to_string(widths.back()));
    }
    widths.back() = cfg.num_classes;
  }

  const Rng root(cfg.seed);
  Rng block_rng = root.split(kBlockStream);
  std::size_t c_in = cfg.input_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::size_t c_out = widths[i];
    const std::string name = block_name(i);
    ConvBlock b{
        Parameter(name + ".conv.weight", he_normal({c_out, c_in, 3, 3}, c_in * 9, block_rng)),
        Parameter(name + ".bn.gamma", Tensor::full({c_out}, 1.0)),
        Parameter(name + ".bn.beta", Tensor::zeros({c_out})),
        BatchNormBuffers(c_out),
    };
    blocks_.push_back(std::move(b));
    c_in = c_out;
  }

  Rng head_rng = root.split(kHeadStream);
  BuiltHead built = build_head(cfg.head, c_in, cfg.num_classes, head_rng);
  head_ = std::move(built.head);
  head_report_ = std::move(built.report);
}

ForwardResult Model::forward(Tape& tape, const Tensor& x, Mode mode) {
  if (x.shape().size() != 4 || x.shape()[1] != cfg_.input_channels) {
    throw ShapeError("model expects N x " + std::to_string(cfg_.input_channels) + " x H x W input, got " +
                     shape_string(x.shape()));
  }
  Var h = tape.constant(x);
  std::vector<Var> relu_inputs;
  for (ConvBlock& b : blocks_) {
    h = conv2d(h, tape.param(b.weight), std::nullopt, {.stride = 2, .padding = 1, .groups = 1});
    h = batchnorm2d(h, tape.param(b.gamma), tape.param(b.beta), b.buffers, mode);
    relu_inputs.push_back(h);
    h = relu(h);
  }
  const Var pooled = global_avg_pool(h);
  const Var logits = head_forward(tape, head_, pooled);
  return {h, pooled, logits, std::move(relu_inputs)};
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (ConvBlock& b : blocks_) {
    out.push_back(&b.weight);
    out.push_back(&b.gamma);
    out.push_back(&b.beta);
  }
  for (Parameter* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
  return out;
}

arch::ArchitectureSpec Model::describe() const {
  arch::ArchitectureSpec spec;
  spec.name = cfg_.preset + "-" + std::string(head_kind_name(cfg_.head));
  spec.num_classes = cfg_.num_classes;
  spec.input_channels = cfg_.input_channels;
  std::size_t c_in = cfg_.input_channels;
  for (const ConvBlock& b : blocks_) {
    const std::size_t c_out = b.weight.value.shape()[0];
    spec.layers.emplace_back(arch::ConvSpec{.c_in = c_in, .c_out = c_out, .kh = 3, .kw = 3, .stride = 2});
    spec.layers.emplace_back(arch::BatchNormSpec{c_out});
    spec.layers.emplace_back(arch::ActivationSpec{"relu"});
    c_in = c_out;
  }
  spec.feature_dim = c_in;
  spec.layers.emplace_back(arch::GlobalAvgPoolSpec{});
  if (cfg_.head != HeadKind::FixedIdentity) {
    spec.layers.emplace_back(arch::FcSpec{.n_in = c_in, .n_out = cfg_.num_classes, .bias = true});
  }
  return spec;
}

Model build_model(const ModelConfig& cfg) { return Model(cfg); }

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.shape().size() != 2) throw ShapeError("argmax_rows expects a matrix, got " + shape_string(logits.shape()));
  const std::size_t n = logits.shape()[0], k = logits.shape()[1];
  std::vector<int> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (logits[i * k + j] > logits[i * k + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace fixedhead
