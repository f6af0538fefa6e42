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
#include <string>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

enum class NormMode {
  kTrain,           // batch statistics, running statistics updated
  kBatchStatsOnly,  // batch statistics, running statistics left alone
  kEval,            // running statistics
};

/// Per-feature batch normalisation with learnable scale and shift.
class BatchNorm {
 public:
  BatchNorm(const std::string& name, std::size_t features, double gamma_init = 0.001,
            double momentum = 0.9, double eps = 1e-5);

  /// x: [B × features]. Batch-statistics modes need B >= 2.
  Var apply(Tape& tape, Var x, NormMode mode);

  std::vector<Parameter*> parameters() { return {&gamma, &beta}; }
  std::size_t features() const { return gamma.size(); }

  Parameter gamma;
  Parameter beta;
  Tensor running_mean;  // starts at 0
  Tensor running_var;   // starts at 1
  double momentum;      // weight kept on the old running value
  double eps;
};

}  // namespace compnli
