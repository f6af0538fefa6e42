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

#include <gtest/gtest.h>

#include <cmath>

#include "compnli/attention.hpp"
#include "compnli/ops.hpp"
#include "test_util.hpp"

namespace compnli {
namespace {

using testing::probe;
using testing::random_tensor;

TEST(Attend, IdenticalPremiseRowsGiveUniformWeights) {
  for (AttentionMode mode : {AttentionMode::kSoftmax, AttentionMode::kLiteral}) {
    Tape tape;
    Var premise = tape.constant(Tensor::matrix(4, 2, {1, 2, 1, 2, 1, 2, 1, 2}));
    Var hyp = tape.constant(Tensor::matrix(2, 2, {1, 1, 0.5, -0.2}));
    const Alignment a = attend(premise, hyp, mode);
    for (double w : a.weights.value().data()) EXPECT_DOUBLE_EQ(w, 0.25);
    for (std::size_t r = 0; r < 2; ++r) {
      EXPECT_DOUBLE_EQ(a.summaries.value().at(r, 0), 1.0);
      EXPECT_DOUBLE_EQ(a.summaries.value().at(r, 1), 2.0);
    }
  }
}

TEST(Attend, LiteralModeHandExample) {
  // Scores are (2, 1, 1) with sum 4.
  Tape tape;
  Var premise = tape.constant(Tensor::matrix(3, 2, {2, 0, 1, 0, 1, 0}));
  Var hyp = tape.constant(Tensor::matrix(1, 2, {1, 0}));
  const Alignment a = attend(premise, hyp, AttentionMode::kLiteral);
  EXPECT_EQ(a.weights.value(), Tensor::matrix(1, 3, {0.5, 0.25, 0.25}));
  EXPECT_EQ(a.summaries.value(), Tensor::matrix(1, 2, {1.5, 0.0}));
}

TEST(Attend, SoftmaxModeScalarOracle) {
  Tape tape;
  Var premise = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 0}));
  Var hyp = tape.constant(Tensor::matrix(1, 2, {1, 0}));
  const Tensor w = attend(premise, hyp, AttentionMode::kSoftmax).weights.value();
  const double e = std::exp(1.0);
  EXPECT_NEAR(w[0], e / (e + 1.0), 1e-15);
  EXPECT_NEAR(w[0], 0.7311, 5e-5);
  EXPECT_NEAR(w[1], 0.2689, 5e-5);
}

TEST(Attend, LiteralDegenerateSumIsReported) {
  Tape tape;
  Var premise = tape.constant(Tensor::matrix(2, 2, {1, 0, -1, 0}));
  Var hyp = tape.constant(Tensor::matrix(1, 2, {1, 0}));
  EXPECT_THROW(attend(premise, hyp, AttentionMode::kLiteral), DegenerateNormalization);
  EXPECT_NO_THROW(attend(premise, hyp, AttentionMode::kSoftmax));
}

TEST(Attend, WidthMismatchIsADimensionError) {
  Tape tape;
  EXPECT_THROW(attend(tape.constant(Tensor({3, 4})), tape.constant(Tensor({2, 5})),
                      AttentionMode::kSoftmax),
               DimensionError);
}

TEST(Attend, MaskedPremiseRowsGetZeroWeight) {
  Rng rng(1);
  const Tensor real = random_tensor({3, 4}, rng);
  const Tensor hyp = random_tensor({2, 4}, rng);
  // Same three rows with two pads interleaved.
  Tensor padded({5, 4}, 9.0);
  const std::size_t where[] = {0, 2, 3};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) padded.at(where[i], j) = real.at(i, j);
  }
  const std::uint8_t mask[] = {1, 0, 1, 1, 0};

  Tape tape;
  const Alignment plain = attend(tape.constant(real), tape.constant(hyp), AttentionMode::kSoftmax);
  const Alignment with_pads =
      attend(tape.constant(padded), tape.constant(hyp), AttentionMode::kSoftmax, mask);
  EXPECT_EQ(with_pads.summaries.value(), plain.summaries.value());
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(with_pads.weights.value().at(r, 1), 0.0);
    EXPECT_EQ(with_pads.weights.value().at(r, 4), 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(with_pads.weights.value().at(r, where[i]), plain.weights.value().at(r, i));
    }
  }
}

TEST(AttendProperty, RowsSumToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t np = 1 + trial % 9, nh = 1 + (trial * 7) % 6, d = 1 + trial % 5;
    Tape tape;
    Var p = tape.constant(random_tensor({np, d}, rng, -3, 3));
    Var h = tape.constant(random_tensor({nh, d}, rng, -3, 3));
    // Positive encodings keep literal sums away from zero.
    Var pp = tape.constant(random_tensor({np, d}, rng, 0.1, 1));
    Var hp = tape.constant(random_tensor({nh, d}, rng, 0.1, 1));
    for (const Alignment& a : {attend(p, h, AttentionMode::kSoftmax), attend(pp, hp, AttentionMode::kLiteral)}) {
      const Tensor& w = a.weights.value();
      for (std::size_t r = 0; r < nh; ++r) {
        double total = 0.0;
        for (double v : w.row(r)) total += v;
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(AttendProperty, SoftmaxWeightsAreOpenUnitAndMonotone) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tape tape;
    const Tensor p = random_tensor({6, 3}, rng, -2, 2), h = random_tensor({1, 3}, rng, -2, 2);
    const Alignment a = attend(tape.constant(p), tape.constant(h), AttentionMode::kSoftmax);
    std::vector<double> score(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 3; ++j) score[i] += p.at(i, j) * h.at(0, j);
    }
    const Tensor& w = a.weights.value();
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_GT(w[i], 0.0);
      EXPECT_LT(w[i], 1.0);
      for (std::size_t k = 0; k < 6; ++k) {
        if (score[i] > score[k]) EXPECT_GT(w[i], w[k]);
      }
    }
  }
}

TEST(AttendProperty, SoftmaxSummaryLiesInTriangle) {
  // Barycentric coordinates of t_p in the triangle of three 2-D premise
  // encodings must all be non-negative.
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const Tensor p = random_tensor({3, 2}, rng, -2, 2), h = random_tensor({1, 2}, rng, -3, 3);
    Tape tape;
    const Tensor t = attend(tape.constant(p), tape.constant(h), AttentionMode::kSoftmax).summaries.value();
    const double x1 = p.at(0, 0), y1 = p.at(0, 1), x2 = p.at(1, 0), y2 = p.at(1, 1), x3 = p.at(2, 0),
                 y3 = p.at(2, 1);
    const double det = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3);
    if (std::abs(det) < 1e-3) continue;
    const double l1 = ((y2 - y3) * (t[0] - x3) + (x3 - x2) * (t[1] - y3)) / det;
    const double l2 = ((y3 - y1) * (t[0] - x3) + (x1 - x3) * (t[1] - y3)) / det;
    const double l3 = 1.0 - l1 - l2;
    EXPECT_GE(l1, -1e-9);
    EXPECT_GE(l2, -1e-9);
    EXPECT_GE(l3, -1e-9);
  }
}

TEST(AttendProperty, LiteralSummaryIsAnAffineCombination) {
  // t_p = sum_i a_i P_i with sum a_i = 1: recompute from the weights.
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = random_tensor({4, 3}, rng, 0.1, 2), h = random_tensor({2, 3}, rng, 0.1, 2);
    Tape tape;
    const Alignment a = attend(tape.constant(p), tape.constant(h), AttentionMode::kLiteral);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t j = 0; j < 3; ++j) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 4; ++i) expect += a.weights.value().at(r, i) * p.at(i, j);
        EXPECT_NEAR(a.summaries.value().at(r, j), expect, 1e-12);
      }
    }
  }
}

TEST(Attend, GradcheckBothModes) {
  Rng rng(6);
  const Tensor p = random_tensor({4, 3}, rng, 0.2, 1.5), h = random_tensor({3, 3}, rng, 0.2, 1.5);
  const Tensor w = random_tensor({3, 3}, rng);
  for (AttentionMode mode : {AttentionMode::kSoftmax, AttentionMode::kLiteral}) {
    auto f = [&](Tape&, std::span<const Var> in) {
      return probe(attend(in[0], in[1], mode).summaries, w);
    };
    EXPECT_LT(gradcheck(f, {p, h}).max_rel_error, 1e-6);
  }
  const std::uint8_t mask[] = {1, 1, 0, 1};
  auto g = [&](Tape&, std::span<const Var> in) {
    return probe(attend(in[0], in[1], AttentionMode::kSoftmax, mask).summaries, w);
  };
  EXPECT_LT(gradcheck(g, {p, h}).max_rel_error, 1e-6);
}

TEST(AlignPairs, OnePairPerHypothesisEncoding) {
  Rng rng(7);
  Tape tape;
  Var p = tape.constant(random_tensor({3, 4}, rng));
  Var h = tape.constant(random_tensor({5, 4}, rng));
  const Alignment a = attend(p, h, AttentionMode::kSoftmax);
  const auto pairs = align_pairs(a, h);
  ASSERT_EQ(pairs.size(), 5u);
  const Tensor m = pair_matrix(a, h).value();
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(pairs[r].encoding.value()[j], h.value().at(r, j));
      EXPECT_EQ(pairs[r].summary.value()[j], a.summaries.value().at(r, j));
      EXPECT_EQ(m.at(r, j), a.summaries.value().at(r, j));
      EXPECT_EQ(m.at(r, 4 + j), h.value().at(r, j));
    }
  }
}

TEST(AlignPairs, OneHotWeightsSelectAPremiseEncoding) {
  Tape tape;
  Var p = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var h = tape.constant(Tensor::matrix(1, 2, {2, 0}));
  const Alignment a = attend(p, h, AttentionMode::kLiteral);
  ASSERT_EQ(a.weights.value(), Tensor::matrix(1, 2, {1, 0}));
  EXPECT_EQ(align_pairs(a, h)[0].summary.value(), Tensor::matrix(1, 2, {1, 0}));
}

}  // namespace
}  // namespace compnli
