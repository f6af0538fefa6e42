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

#include "compnli/autodiff.hpp"

namespace compnli {

Parameter::Parameter(std::string name_in, Tensor value_in)
    : name(std::move(name_in)), value(std::move(value_in)), grad(value.shape(), 0.0) {}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  node.keep_grad = true;
  return push(std::move(node));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.requires_grad = true;
  node.keep_grad = true;
  node.parameter = &p;
  Var v = push(std::move(node));
  param_nodes_.emplace(&p, v.id());
  parameters_.push_back(&p);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw ArgumentError("operation mixes nodes from different tapes");
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

Tensor* Tape::grad_slot(std::size_t id) {
  if (!nodes_[id].requires_grad) return nullptr;
  if (grads_[id].empty()) grads_[id] = Tensor(nodes_[id].value.shape(), 0.0);
  return &grads_[id];
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw ArgumentError("backward() on an empty tape");
  if (loss.tape_ != this) throw ArgumentError("loss belongs to a different tape");
  if (loss.size() != 1) {
    throw ArgumentError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  if (!nodes_[loss.id_].requires_grad) return;
  grads_[loss.id_] = Tensor(loss.shape(), 1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    if (grads_[i].empty()) continue;
    Node& node = nodes_[i];
    if (node.backward) node.backward(*this, i);
    if (node.parameter != nullptr) {
      auto dst = node.parameter->grad.data();
      auto src = grads_[i].data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    if (!node.keep_grad) grads_[i] = Tensor();
  }
}

Tensor Tape::grad(Var v) const {
  if (v.id_ < grads_.size() && !grads_[v.id_].empty()) return grads_[v.id_];
  return Tensor(nodes_[v.id_].value.shape(), 0.0);
}

}  // namespace compnli
