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

#include "compnli/batchnorm.hpp"

#include "compnli/ops.hpp"

namespace compnli {

BatchNorm::BatchNorm(const std::string& name, std::size_t features, double gamma_init,
                     double momentum_, double eps_)
    : gamma(name + ".gamma", Tensor({features}, gamma_init)),
      beta(name + ".beta", Tensor({features})),
      running_mean({features}),
      running_var({features}, 1.0),
      momentum(momentum_),
      eps(eps_) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ArgumentError("batch norm momentum must be in [0, 1]");
  if (!(eps > 0.0)) throw ArgumentError("batch norm eps must be positive");
}

Var BatchNorm::apply(Tape& tape, Var x, NormMode mode) {
  Var g = tape.param(gamma), b = tape.param(beta);
  if (mode == NormMode::kEval) return batch_norm_fixed(x, g, b, running_mean, running_var, eps);

  Tensor mean, var;
  Var out = batch_norm_train(x, g, b, eps, &mean, &var);
  if (mode == NormMode::kTrain) {
    // The running variance tracks the unbiased estimate.
    const double n = static_cast<double>(x.rows());
    const double unbias = n / (n - 1.0);
    for (std::size_t j = 0; j < features(); ++j) {
      running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean[j];
      running_var[j] = momentum * running_var[j] + (1.0 - momentum) * var[j] * unbias;
    }
  }
  return out;
}

}  // namespace compnli
