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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

/// A gradient contained NaN or infinity. No parameter was modified.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. Reads
/// Parameter::grad; the caller clears gradients between steps.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  void step();
  void zero_grad();

  const AdamOptions& options() const { return options_; }
  std::uint64_t steps() const { return t_; }
  const std::vector<Parameter*>& params() const { return params_; }

  // Moment access for checkpoints, indexed like params().
  Tensor& first_moment(std::size_t i) { return m_.at(i); }
  Tensor& second_moment(std::size_t i) { return v_.at(i); }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t t_ = 0;
};

}  // namespace compnli
