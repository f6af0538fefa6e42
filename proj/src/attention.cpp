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

#include "compnli/attention.hpp"

#include <cmath>
#include <string>

#include "compnli/ops.hpp"

namespace compnli {
namespace {

constexpr double kMinLiteralSum = 1e-8;

void require_encodings(Var v, const char* what) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string("attend: ") + what + " must be [n x d], got " +
                         shape_string(v.shape()));
  }
}

}  // namespace

Alignment attend(Var premise, Var hypothesis, AttentionMode mode,
                 std::span<const std::uint8_t> premise_mask) {
  require_encodings(premise, "premise");
  require_encodings(hypothesis, "hypothesis");
  if (premise.cols() != hypothesis.cols()) {
    throw DimensionError("attend: encoding widths differ: " + shape_string(premise.shape()) +
                         " and " + shape_string(hypothesis.shape()));
  }
  const std::size_t np = premise.rows();

  // Restrict to real premise rows, then scatter the weights back so padded
  // columns hold exact zeros.
  std::vector<std::ptrdiff_t> real, scatter;
  if (!premise_mask.empty()) {
    if (premise_mask.size() != np) throw DimensionError("attend: mask length differs from premise");
    for (std::size_t i = 0; i < np; ++i) {
      scatter.push_back(premise_mask[i] ? static_cast<std::ptrdiff_t>(real.size()) : -1);
      if (premise_mask[i]) real.push_back(static_cast<std::ptrdiff_t>(i));
    }
    if (real.empty()) throw ArgumentError("attend: premise has no real positions");
  }
  const bool masked = !real.empty() && real.size() < np;
  Var p = masked ? gather_rows(premise, real) : premise;

  Var scores = matmul(hypothesis, transpose(p));
  Var weights;
  if (mode == AttentionMode::kSoftmax) {
    weights = softmax(scores);
  } else {
    const Tensor& s = scores.value();
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double total = 0.0;
      for (double v : s.row(r)) total += v;
      if (std::abs(total) < kMinLiteralSum) {
        throw DegenerateNormalization("attend: scores of hypothesis encoding " +
                                      std::to_string(r) + " sum to " + std::to_string(total));
      }
    }
    weights = row_normalize(scores, kMinLiteralSum);
  }
  Var summaries = matmul(weights, p);
  if (masked) weights = transpose(gather_rows(transpose(weights), scatter));
  return {weights, summaries};
}

std::vector<AlignedPair> align_pairs(const Alignment& alignment, Var hypothesis) {
  if (alignment.summaries.rows() != hypothesis.rows()) {
    throw DimensionError("align_pairs: alignment was built for a different hypothesis");
  }
  std::vector<AlignedPair> pairs;
  for (std::size_t r = 0; r < hypothesis.rows(); ++r) {
    const std::ptrdiff_t idx[] = {static_cast<std::ptrdiff_t>(r)};
    pairs.push_back({gather_rows(alignment.summaries, idx), gather_rows(hypothesis, idx)});
  }
  return pairs;
}

Var pair_matrix(const Alignment& alignment, Var hypothesis) {
  if (alignment.summaries.rows() != hypothesis.rows()) {
    throw DimensionError("pair_matrix: alignment was built for a different hypothesis");
  }
  return concat({alignment.summaries, hypothesis});
}

}  // namespace compnli
