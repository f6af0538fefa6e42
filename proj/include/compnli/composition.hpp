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
#include <memory>
#include <string>
#include <vector>

#include "compnli/autodiff.hpp"
#include "compnli/batchnorm.hpp"

namespace compnli {

class Rng;

/// Where the operator networks normalise.
enum class NormPlacement {
  kNone,
  kAfterAffine,  // after each affine map, before its sigmoid
};

struct OperatorBankConfig {
  std::size_t input_dim = 0;  // width of one aligned pair [t_p ; H_e^p]
  std::size_t hidden = 300;
  std::size_t out = 300;
  std::size_t operators = 11;
  NormPlacement norm = NormPlacement::kAfterAffine;
  double bn_gamma_init = 0.001;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
};

/// k two-layer sigmoid networks ("operators") mixed per pair by a softmax
/// gate over the same pair input.
class OperatorBank {
 public:
  OperatorBank(const std::string& name, const OperatorBankConfig& config, Rng& rng);

  struct Output {
    Var composed;            // [R × out]
    Var gates;               // [R × k]
    std::vector<Var> tasks;  // k × [R × out]
  };

  /// Operator i on R pairs [R × input_dim].
  Var task(Tape& tape, std::size_t i, Var pairs, NormMode mode);
  /// Gate weights [R × k].
  Var gate(Tape& tape, Var pairs);
  /// Gate-weighted sum of all operator outputs.
  Output compose(Tape& tape, Var pairs, NormMode mode);

  std::size_t operators() const { return ops_.size(); }
  const OperatorBankConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<BatchNorm*> norms();

  // Direct access for tests and inspection.
  Parameter& gate_weight() { return gate_W_; }
  Parameter& gate_bias() { return gate_b_; }
  // b1 and b2 are only used without normalisation.
  struct Operator {
    Parameter W1, b1, W2, b2;
    std::unique_ptr<BatchNorm> bn1, bn2;
  };
  Operator& op(std::size_t i) { return ops_.at(i); }

 private:
  OperatorBankConfig config_;
  std::vector<Operator> ops_;
  Parameter gate_W_;
  Parameter gate_b_;
};

}  // namespace compnli
