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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compnli/encoders.hpp"

namespace compnli {

// Fixed label order; checkpoints record it.
inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {"entailment", "neutral",
                                                                         "contradiction"};

std::optional<int> label_index(std::string_view name);
std::string_view label_name(int index);

/// Probabilities in label order.
struct LabelDistribution {
  std::array<double, kNumLabels> probs{};
  int argmax() const;
};

/// Row r of a [B × 3] probability tensor.
LabelDistribution distribution_row(const Tensor& probs, std::size_t r);

/// -log(max(p[gold], 1e-12)).
double cross_entropy(const LabelDistribution& pred, int gold);

/// Chain LSTM over the composed pair outputs followed by a softmax
/// classifier on its last hidden state.
class Aggregator {
 public:
  Aggregator(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng,
             double forget_bias = 1.0);

  /// Final hidden state [1 × hidden] of one sequence [n × input_dim].
  Var aggregate(Tape& tape, Var outputs);
  /// Final hidden states [S × hidden] of stacked sequences.
  Var aggregate(Tape& tape, Var outputs, const SequenceLayout& layout);

  /// softmax(A W + b): [B × hidden] -> [B × 3].
  Var classify(Tape& tape, Var A);

  std::vector<Parameter*> parameters();
  LstmCellParams& cell() { return cell_; }
  Parameter& weight() { return W_; }
  Parameter& bias() { return b_; }

 private:
  LstmCellParams cell_;
  Parameter W_;
  Parameter b_;
};

}  // namespace compnli
