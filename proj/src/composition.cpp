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

#include "compnli/composition.hpp"

#include "compnli/init.hpp"
#include "compnli/ops.hpp"
#include "compnli/rng.hpp"

namespace compnli {

OperatorBank::OperatorBank(const std::string& name, const OperatorBankConfig& config, Rng& rng)
    : config_(config) {
  if (config.operators == 0) throw ArgumentError("operator bank needs at least one operator");
  if (config.input_dim == 0 || config.hidden == 0 || config.out == 0) {
    throw ArgumentError("operator bank dimensions must be positive");
  }
  ops_.resize(config.operators);
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const std::string prefix = name + ".op" + std::to_string(i);
    Operator& op = ops_[i];
    op.W1 = Parameter(prefix + ".W1", xavier_uniform(config.input_dim, config.hidden, rng));
    op.W2 = Parameter(prefix + ".W2", xavier_uniform(config.hidden, config.out, rng));
    if (config.norm == NormPlacement::kNone) {
      op.b1 = Parameter(prefix + ".b1", Tensor({config.hidden}));
      op.b2 = Parameter(prefix + ".b2", Tensor({config.out}));
    } else {
      // beta takes the role of the affine bias, which normalisation would
      // cancel anyway.
      op.bn1 = std::make_unique<BatchNorm>(prefix + ".bn1", config.hidden, config.bn_gamma_init,
                                           config.bn_momentum, config.bn_eps);
      op.bn2 = std::make_unique<BatchNorm>(prefix + ".bn2", config.out, config.bn_gamma_init,
                                           config.bn_momentum, config.bn_eps);
    }
  }
  gate_W_ = Parameter(name + ".gate.W", xavier_uniform(config.input_dim, config.operators, rng));
  gate_b_ = Parameter(name + ".gate.b", Tensor({config.operators}));
}

Var OperatorBank::task(Tape& tape, std::size_t i, Var pairs, NormMode mode) {
  if (i >= ops_.size()) {
    throw ArgumentError("operator index " + std::to_string(i) + " out of range for a bank of " +
                        std::to_string(ops_.size()));
  }
  if (pairs.value().rank() != 2 || pairs.cols() != config_.input_dim) {
    throw DimensionError("operator input must be [R x " + std::to_string(config_.input_dim) +
                         "], got " + shape_string(pairs.shape()));
  }
  Operator& op = ops_[i];
  auto layer = [&](Var x, Parameter& W, Parameter& b, BatchNorm* bn) {
    Var a = matmul(x, tape.param(W));
    return bn ? bn->apply(tape, a, mode) : add_bias(a, tape.param(b));
  };
  Var a1 = layer(pairs, op.W1, op.b1, op.bn1.get());
  return sigmoid(layer(sigmoid(a1), op.W2, op.b2, op.bn2.get()));
}

Var OperatorBank::gate(Tape& tape, Var pairs) {
  if (pairs.value().rank() != 2 || pairs.cols() != config_.input_dim) {
    throw DimensionError("gate input must be [R x " + std::to_string(config_.input_dim) +
                         "], got " + shape_string(pairs.shape()));
  }
  return softmax(add_bias(matmul(pairs, tape.param(gate_W_)), tape.param(gate_b_)));
}

OperatorBank::Output OperatorBank::compose(Tape& tape, Var pairs, NormMode mode) {
  Output out;
  out.gates = gate(tape, pairs);
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    out.tasks.push_back(task(tape, i, pairs, mode));
    Var weighted = scale_rows(out.tasks.back(), out.gates, i);
    out.composed = i == 0 ? weighted : add(out.composed, weighted);
  }
  return out;
}

std::vector<Parameter*> OperatorBank::parameters() {
  std::vector<Parameter*> out;
  for (Operator& op : ops_) {
    if (op.bn1) {
      out.push_back(&op.W1);
      for (Parameter* p : op.bn1->parameters()) out.push_back(p);
      out.push_back(&op.W2);
      for (Parameter* p : op.bn2->parameters()) out.push_back(p);
    } else {
      for (Parameter* p : {&op.W1, &op.b1, &op.W2, &op.b2}) out.push_back(p);
    }
  }
  out.push_back(&gate_W_);
  out.push_back(&gate_b_);
  return out;
}

std::vector<BatchNorm*> OperatorBank::norms() {
  std::vector<BatchNorm*> out;
  for (Operator& op : ops_) {
    if (op.bn1) {
      out.push_back(op.bn1.get());
      out.push_back(op.bn2.get());
    }
  }
  return out;
}

}  // namespace compnli
