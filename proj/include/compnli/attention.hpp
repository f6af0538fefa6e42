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
#include <span>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

enum class AttentionMode {
  kSoftmax,  // softmax over dot products
  kLiteral,  // dot products divided by their sum
};

/// Literal-mode scores that sum to (nearly) zero cannot be normalised.
class DegenerateNormalization : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

struct Alignment {
  Var weights;    // [hypothesis encodings × premise encodings]
  Var summaries;  // [hypothesis encodings × d], row p is t_p
};

/// Every hypothesis encoding (row of `hypothesis`) attends over the premise
/// encodings with dot-product scores. Premise rows whose mask entry is 0 get
/// weight exactly 0; an empty mask means all rows are real.
Alignment attend(Var premise, Var hypothesis, AttentionMode mode,
                 std::span<const std::uint8_t> premise_mask = {});

struct AlignedPair {
  Var summary;   // t_p
  Var encoding;  // H_e^p
};

/// One pair per hypothesis encoding, in hypothesis order.
std::vector<AlignedPair> align_pairs(const Alignment& alignment, Var hypothesis);

/// The same pairs as rows [t_p ; H_e^p] of one matrix.
Var pair_matrix(const Alignment& alignment, Var hypothesis);

}  // namespace compnli
