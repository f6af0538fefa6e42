// Copyright 2026 The compnli Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "compnli/tensor.hpp"

namespace compnli {

class Tape;

/// A trainable tensor together with its gradient slot. Gradients accumulate
/// across backward passes until zero_grad() is called.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }

  std::string name;
  Tensor value;
  Tensor grad;
};

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t size() const { return value().size(); }

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of a forward computation. Nodes are stored in
/// creation order, so every node's inputs precede it and a single reverse
/// sweep is a valid backward pass.
///
/// A tape belongs to one thread at a time.
class Tape {
 public:
  /// Propagates the gradient stored for node `self` to its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A value that never receives a gradient.
  Var constant(Tensor value);
  /// An input whose gradient can be read back with grad() after backward().
  Var leaf(Tensor value);
  /// Registers `p` on the tape; repeated calls return the same node.
  Var param(Parameter& p);

  /// Appends an operation node. `backward` is dropped when no input needs a
  /// gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  /// Reverse sweep from a single-element loss. Parameter gradients are
  /// added into Parameter::grad.
  void backward(Var loss);

  /// Gradient of the last backward() for a leaf or parameter node.
  Tensor grad(Var v) const;

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id()); }

  /// Gradient slot of node `id` during backward, or nullptr when the node
  /// does not need one. Allocated lazily as zeros.
  Tensor* grad_slot(std::size_t id);
  /// Gradient flowing into node `id` (valid inside its BackwardFn).
  const Tensor& upstream(std::size_t id) const { return grads_[id]; }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Parameter*>& parameters() const { return parameters_; }

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool requires_grad = false;
    bool keep_grad = false;
    Parameter* parameter = nullptr;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<Parameter*> parameters_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace compnli
