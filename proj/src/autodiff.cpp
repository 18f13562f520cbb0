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

#include "fixedhead/autodiff.hpp"

#include <algorithm>
#include <cassert>

#include "fixedhead/errors.hpp"

namespace fixedhead {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }
std::span<const double> Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  value.clear_grad();
  values_.push_back(std::move(value));
  return Var(this, values_.size() - 1);
}

Var Tape::variable(Tensor value) {
  value.set_requires_grad(true);
  value.clear_grad();
  values_.push_back(std::move(value));
  return Var(this, values_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (!p.trainable) return constant(p.value);
  Var v = variable(p.value);
  bindings_.push_back({v.id(), &p});
  return v;
}

Var Tape::record(Tensor output, std::initializer_list<Var> inputs, BackwardFn backward) {
#ifndef NDEBUG
  // Finite inputs must give finite outputs.
  bool inputs_finite = true;
  for (const auto& in : inputs) inputs_finite = inputs_finite && in.value().all_finite();
  assert(!inputs_finite || output.all_finite());
#endif
  bool needs_grad = false;
  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw ContractError("operands belong to different tapes");
    ids.push_back(in.id());
    needs_grad = needs_grad || requires_grad(in.id());
  }
  output.set_requires_grad(needs_grad);
  output.clear_grad();
  values_.push_back(std::move(output));
  const std::size_t out = values_.size() - 1;
  if (needs_grad) nodes_.push_back({std::move(ids), out, std::move(backward)});
  return Var(this, out);
}

std::span<double> Tape::grad_sink(std::size_t id) {
  Tensor& t = values_.at(id);
  if (!t.requires_grad()) return {};
  return t.mutable_grad();
}

std::span<const double> Tape::grad(std::size_t id) { return grad_sink(id); }

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss is not on this tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  for (auto& v : values_) v.zero_grad();
  if (!requires_grad(loss.id())) return;
  grad_sink(loss.id())[0] = 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output > loss.id()) continue;
    const Tensor& out = values_[it->output];
    if (!out.has_grad()) continue;
    // Copy: the callback may allocate sibling gradient buffers.
    const std::vector<double> g(out.grad().begin(), out.grad().end());
    it->backward(*this, g);
  }

  for (const auto& b : bindings_) {
    const Tensor& t = values_[b.id];
    if (!t.has_grad()) continue;
    auto dst = b.param->value.mutable_grad();
    auto src = t.grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace fixedhead
