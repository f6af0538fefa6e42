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
#include <cstdint>
#include <span>
#include <vector>

#include "compnli/autodiff.hpp"

// Differentiable operations. Shapes must match exactly; the only implicit
// broadcast is a single-element operand against a tensor in add/sub/mul.
// Row-wise operations treat a rank 1 tensor as a single row.

namespace compnli {

/// a[m×k] · b[k×n]
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

/// x[r×f] + bias[f] added to every row.
Var add_bias(Var x, Var bias);

Var sigmoid(Var a);
Var tanh(Var a);

/// Softmax over the last axis, computed with max subtraction.
Var softmax(Var a);

/// Each row divided by its own sum, without exponentiation. Throws
/// ArgumentError when a row sum has magnitude below `min_abs_sum`.
Var row_normalize(Var a, double min_abs_sum = 1e-8);

/// Sum of all elements, as a single-element tensor.
Var sum(Var a);

/// Concatenation along the last axis. All parts must have the same number
/// of rows.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Concatenation along the first axis of rank 2 tensors with equal widths.
Var concat_rows(std::span<const Var> parts);

/// Columns [begin, begin + length) of every row.
Var slice(Var a, std::size_t begin, std::size_t length);

/// Row i of the result is row indices[i] of `a`, or zeros when the index is
/// negative.
Var gather_rows(Var a, std::span<const std::ptrdiff_t> indices);

/// Row r of the result is row r of `on_true` where take[r] is set, else row r
/// of `on_false`. Rows are copied, not blended.
Var select_rows(std::span<const std::uint8_t> take, Var on_true, Var on_false);

/// Row r of `a` scaled by weights[r, column].
Var scale_rows(Var a, Var weights, std::size_t column);
/// Row r of `a` scaled by the constant factors[r].
Var scale_rows(Var a, std::span<const double> factors);

/// Per-column normalisation with the statistics of this batch. The batch
/// mean and biased variance are written to the optional outputs.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps, Tensor* batch_mean = nullptr,
                     Tensor* batch_var = nullptr);
/// Per-column normalisation with fixed statistics.
Var batch_norm_fixed(Var x, Var gamma, Var beta, const Tensor& mean, const Tensor& var,
                     double eps);

/// Mean over rows of -log(max(probs[r, gold[r]], floor)).
Var nll_loss(Var probs, std::span<const int> gold, double floor = 1e-12);

}  // namespace compnli
