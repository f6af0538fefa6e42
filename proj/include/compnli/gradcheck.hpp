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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<target>[<flat index>] analytic .. numeric .." of the worst coordinate
  std::size_t coordinates = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
double relative_error(double analytic, double numeric) noexcept;

/// Compares reverse-mode gradients of a scalar function against central
/// differences with the given step, over every coordinate of `inputs`.
///
/// `f` must be deterministic. Drawing from any Rng while `f` runs raises
/// ContractViolation, since a stochastic function has no stable numeric
/// derivative.
GradCheckReport gradcheck(const std::function<Var(Tape&, std::span<const Var>)>& f,
                          std::vector<Tensor> inputs, double step = 1e-5);

/// Same check over every coordinate of the given parameters. `f` must put
/// the parameters on the tape itself (Tape::param).
GradCheckReport gradcheck_parameters(const std::function<Var(Tape&)>& f,
                                     std::span<Parameter* const> params, double step = 1e-5);

}  // namespace compnli
