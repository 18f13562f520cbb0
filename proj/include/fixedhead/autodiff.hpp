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
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixedhead/tensor.hpp"

namespace fixedhead {

// A named tensor owned by a model. Non-trainable parameters enter a tape as
// constants and are never written by the optimizer.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
  std::optional<std::vector<double>> momentum;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train) {}
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  /// Gradient accumulated by the last backward pass (zeros if untouched).
  std::span<const double> grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of a forward computation. Values are stored by id in
// creation order, so every node's inputs precede its output and a single
// reverse sweep visits each node once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::span<const double> grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  /// Trainable parameters become differentiable leaves whose gradient is
  /// added to `p.value` on backward; fixed ones enter as constants.
  Var param(Parameter& p);

  /// Records `output = op(inputs)`. A node is kept only when some input
  /// requires a gradient.
  Var record(Tensor output, std::initializer_list<Var> inputs, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return values_.at(id); }
  bool requires_grad(std::size_t id) const { return values_.at(id).requires_grad(); }
  /// Gradient buffer for id, or an empty span if id does not require grad.
  std::span<double> grad_sink(std::size_t id);
  /// Same as grad_sink but read-only; zeros if backward never reached id.
  std::span<const double> grad(std::size_t id);

  std::size_t value_count() const { return values_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<std::size_t> inputs;
    std::size_t output;
    BackwardFn backward;
  };
  struct Binding {
    std::size_t id;
    Parameter* param;
  };

  std::deque<Tensor> values_;  // references stay valid as values are appended
  std::vector<Node> nodes_;
  std::vector<Binding> bindings_;
};

}  // namespace fixedhead
