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

#include "compnli/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "compnli/rng.hpp"

namespace compnli {
namespace {

double evaluate(const std::function<Var(Tape&)>& f) {
  const auto before = rng_draw_count();
  Tape tape;
  Var out = f(tape);
  if (rng_draw_count() != before) {
    throw ContractViolation("gradcheck: the checked function consumed random numbers");
  }
  if (out.size() != 1) {
    throw ArgumentError("gradcheck: function must return a scalar, got " +
                        shape_string(out.shape()));
  }
  return out.value()[0];
}

// Perturbs each coordinate of each target in place and restores it.
GradCheckReport compare(const std::function<Var(Tape&)>& f, std::vector<Tensor*> targets,
                        const std::vector<Tensor>& analytic, const std::vector<std::string>& names,
                        double step) {
  GradCheckReport report;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    auto values = targets[t]->data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = evaluate(f);
      values[i] = saved - step;
      const double down = evaluate(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[t][i], numeric);
      if (report.coordinates++ == 0 || err > report.max_rel_error) {
        report.max_rel_error = err;
        char detail[96];
        std::snprintf(detail, sizeof detail, "] analytic %.9g numeric %.9g", analytic[t][i], numeric);
        report.worst = names[t] + "[" + std::to_string(i) + detail;
      }
    }
  }
  return report;
}

}  // namespace

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport gradcheck(const std::function<Var(Tape&, std::span<const Var>)>& f,
                          std::vector<Tensor> inputs, double step) {
  if (inputs.empty()) throw ArgumentError("gradcheck: no inputs");
  std::vector<Tensor> analytic;
  {
    const auto before = rng_draw_count();
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& in : inputs) vars.push_back(tape.leaf(in));
    Var out = f(tape, vars);
    if (rng_draw_count() != before) {
      throw ContractViolation("gradcheck: the checked function consumed random numbers");
    }
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }
  auto as_closure = [&](Tape& tape) {
    std::vector<Var> vars;
    for (const Tensor& in : inputs) vars.push_back(tape.constant(in));
    return f(tape, vars);
  };
  std::vector<Tensor*> targets;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    targets.push_back(&inputs[i]);
    names.push_back("input" + std::to_string(i));
  }
  return compare(as_closure, targets, analytic, names, step);
}

GradCheckReport gradcheck_parameters(const std::function<Var(Tape&)>& f,
                                     std::span<Parameter* const> params, double step) {
  if (params.empty()) throw ArgumentError("gradcheck: no parameters");
  std::vector<Tensor> saved_grads;
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->zero_grad();
  }
  {
    const auto before = rng_draw_count();
    Tape tape;
    Var out = f(tape);
    if (rng_draw_count() != before) {
      throw ContractViolation("gradcheck: the checked function consumed random numbers");
    }
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  std::vector<Tensor*> targets;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < params.size(); ++i) {
    analytic.push_back(params[i]->grad);
    params[i]->grad = saved_grads[i];
    targets.push_back(&params[i]->value);
    names.push_back(params[i]->name);
  }
  return compare(f, targets, analytic, names, step);
}

}  // namespace compnli
