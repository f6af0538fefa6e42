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

#include "compnli/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "compnli/init.hpp"
#include "compnli/ops.hpp"

namespace compnli {

std::optional<int> label_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string_view label_name(int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= kNumLabels) {
    throw ArgumentError("label index " + std::to_string(index) + " out of range");
  }
  return kLabelNames[index];
}

int LabelDistribution::argmax() const {
  // Ties go to the lowest index.
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

LabelDistribution distribution_row(const Tensor& probs, std::size_t r) {
  if (probs.cols() != kNumLabels) throw DimensionError("expected 3 label probabilities");
  LabelDistribution d;
  for (std::size_t j = 0; j < kNumLabels; ++j) d.probs[j] = probs.at(r, j);
  return d;
}

double cross_entropy(const LabelDistribution& pred, int gold) {
  return -std::log(std::max(pred.probs.at(static_cast<std::size_t>(gold)), 1e-12));
}

Aggregator::Aggregator(const std::string& name, std::size_t input_dim, std::size_t hidden,
                       Rng& rng, double forget_bias)
    : cell_(name + ".lstm", input_dim, hidden, rng, forget_bias),
      W_(name + ".classifier.W", xavier_uniform(hidden, kNumLabels, rng)),
      b_(name + ".classifier.b", Tensor({kNumLabels})) {}

Var Aggregator::aggregate(Tape& tape, Var outputs) {
  if (outputs.value().rank() != 2) {
    throw DimensionError("aggregate expects [n x d], got " + shape_string(outputs.shape()));
  }
  return aggregate(tape, outputs, SequenceLayout::from_lengths({outputs.rows()}));
}

Var Aggregator::aggregate(Tape& tape, Var outputs, const SequenceLayout& layout) {
  return run_lstm(tape, cell_, outputs, layout, layout.max_length(), false).final_h;
}

Var Aggregator::classify(Tape& tape, Var A) {
  if (A.value().rank() != 2 || A.cols() != cell_.hidden) {
    throw DimensionError("classify expects [B x " + std::to_string(cell_.hidden) + "], got " +
                         shape_string(A.shape()));
  }
  return softmax(add_bias(matmul(A, tape.param(W_)), tape.param(b_)));
}

std::vector<Parameter*> Aggregator::parameters() {
  std::vector<Parameter*> out = cell_.parameters();
  out.push_back(&W_);
  out.push_back(&b_);
  return out;
}

}  // namespace compnli
