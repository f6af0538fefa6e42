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

#include "compnli/model.hpp"

#include <cmath>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "compnli/optimizer.hpp"
#include "model_fixture.hpp"
#include "test_util.hpp"

namespace compnli {
namespace {

using testing::small_config;
using testing::small_model;
using testing::small_table;

std::vector<SentencePair> few_pairs() {
  return {make_pair("a man is sleeping .", "the man is not running", 0),
          make_pair("the dog is happy", "a dog is sad .", 2),
          make_pair("a woman is eating outside", "the woman is inside", 1)};
}

Batch one_batch(const std::vector<SentencePair>& pairs, std::size_t seq_len) {
  return make_batches(pairs, pairs.size(), seq_len, std::nullopt).at(0);
}

// ---------------------------------------------------------------------------
// Adam

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  Parameter p("p", Tensor::vector({0.25, -1.5}));
  Adam opt({&p});
  for (int i = 0; i < 5; ++i) opt.step();
  EXPECT_EQ(p.value.data()[0], 0.25);
  EXPECT_EQ(p.value.data()[1], -1.5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", Tensor::vector({2.0}));
  Adam opt({&p});
  p.grad = Tensor::vector({1.0});
  opt.step();
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.value.data()[0], 2.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, StepSizeIsScaleInvariant) {
  for (double g : {1e-3, 1.0, 1e3}) {
    Parameter p("p", Tensor::vector({0.0}));
    Adam opt({&p});
    p.grad = Tensor::vector({g});
    opt.step();
    EXPECT_NEAR(p.value.data()[0], -1e-3, 1e-8) << g;
  }
}

TEST(Adam, MinimisesQuadratic) {
  Parameter p("theta", Tensor::vector({0.0}));
  Adam opt({&p}, AdamOptions{0.05, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    p.grad = Tensor::vector({p.value.data()[0] - 3.0});
    opt.step();
  }
  EXPECT_LT(std::abs(p.value.data()[0] - 3.0), 0.05);
}

TEST(Adam, NonFiniteGradientAbortsWithoutUpdating) {
  Parameter a("layer.a", Tensor::vector({1.0}));
  Parameter b("layer.b", Tensor::vector({1.0, 2.0}));
  Adam opt({&a, &b});
  a.grad = Tensor::vector({0.5});
  b.grad = Tensor::vector({0.1, std::numeric_limits<double>::quiet_NaN()});
  try {
    opt.step();
    FAIL() << "expected NonFiniteGradient";
  } catch (const NonFiniteGradient& e) {
    EXPECT_NE(std::string(e.what()).find("layer.b"), std::string::npos) << e.what();
  }
  EXPECT_EQ(a.value.data()[0], 1.0);
  EXPECT_EQ(opt.steps(), 0u);
  b.grad = Tensor::vector({0.1, std::numeric_limits<double>::infinity()});
  EXPECT_THROW(opt.step(), NonFiniteGradient);
}

// ---------------------------------------------------------------------------
// Parameter accounting, checked against a closed-form count

std::size_t lstm_count(std::size_t in, std::size_t h) { return 4 * (in * h + h * h + h); }

std::size_t expected_count(const ModelConfig& c) {
  const std::size_t d = c.word_dim;
  std::size_t n = d * d + d;  // shared transform
  std::size_t enc_dim;
  if (c.encoder == EncoderKind::kBilstm) {
    n += 2 * lstm_count(d, c.bilstm_hidden);
    enc_dim = d + 2 * c.bilstm_hidden;
  } else {
    const std::size_t h = c.btree_hidden;
    n += 3 * d * h + 6 * h * h + 4 * h * h + 5 * h;  // x = 0 needs no forget input matrix
    enc_dim = h;
  }
  const std::size_t e = 2 * enc_dim, oh = c.op_hidden, oo = c.op_out, k = c.operators;
  n += k * (e * oh + oh * oo + 2 * oh + 2 * oo);  // batch norm replaces the biases
  n += e * k + k;
  n += lstm_count(oo, c.agg_hidden) + 3 * c.agg_hidden + 3;
  return n;
}

TEST(ParameterCount, DefaultsMatchClosedForm) {
  ModelConfig tree;
  NliModel tm(tree, make_embedding_table(tree));
  ModelConfig bilstm;
  bilstm.encoder = EncoderKind::kBilstm;
  NliModel bm(bilstm, make_embedding_table(bilstm));

  EXPECT_EQ(tm.parameter_count(), expected_count(tree));
  EXPECT_EQ(bm.parameter_count(), expected_count(bilstm));
  EXPECT_EQ(tm.parameter_count(), 4'973'714u);
  EXPECT_EQ(bm.parameter_count(), 9'217'814u);
  EXPECT_GE(tm.parameter_count(), 1'000'000u);
  EXPECT_LE(tm.parameter_count(), 10'000'000u);
  EXPECT_LT(tm.parameter_count(), bm.parameter_count());

  std::size_t total = 0;
  for (const auto& line : tm.parameter_breakdown()) total += line.count;
  EXPECT_EQ(total, tm.parameter_count());
}

TEST(ParameterCount, SmallConfigsAndUnsharedVariants) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    ModelConfig c = small_config(kind);
    EXPECT_EQ(NliModel(c, small_table(c)).parameter_count(), expected_count(c));
    c.share_transform = false;
    EXPECT_EQ(NliModel(c, small_table(c)).parameter_count(),
              expected_count(c) + c.word_dim * c.word_dim + c.word_dim);
  }
}

TEST(ParameterCount, ParametersAreListedOnce) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    NliModel m = small_model(kind);
    std::set<std::string> names;
    for (Parameter* p : m.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  }
}

// ---------------------------------------------------------------------------
// Forward pass

TEST(Forward, ProbabilitiesAndShapes) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    NliModel m = small_model(kind);
    const auto pairs = few_pairs();
    Tape tape;
    const auto out = m.forward(tape, one_batch(pairs, 12), NormMode::kEval);
    ASSERT_EQ(out.probs.shape(), (Shape{3, 3}));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double p = out.probs.value().at(r, c);
        EXPECT_GT(p, 0.0);
        s += p;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    ASSERT_TRUE(out.loss.has_value());
    EXPECT_GT(out.loss->value().item(), 0.0);
    ASSERT_EQ(out.alignments.size(), 3u);
    // One alignment row per hypothesis encoding.
    const std::size_t per_tree = 2 * 5 - 1;
    const std::size_t rows = kind == EncoderKind::kBtree ? per_tree : 5;
    EXPECT_EQ(out.alignments[0].weights.rows(), rows);
  }
}

TEST(Forward, MissingGoldGivesNoLoss) {
  NliModel m = small_model(EncoderKind::kBtree);
  Tape tape;
  auto out = m.forward(tape, one_batch({make_pair("a dog", "a cat")}, 12), NormMode::kEval);
  EXPECT_FALSE(out.loss.has_value());
}

TEST(Forward, PaddingAndBatchMatesDoNotChangePredictions) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    for (bool trim : {true, false}) {
      ModelConfig c = small_config(kind);
      c.trim_padding = trim;
      NliModel m(c, small_table(c));
      const auto pairs = few_pairs();
      Tape t0;
      const Tensor alone = m.forward(t0, one_batch({pairs[0]}, 6), NormMode::kEval).probs.value();
      for (std::size_t seq_len : {6u, 12u, 64u}) {
        Tape t;
        const Tensor all = m.forward(t, one_batch(pairs, seq_len), NormMode::kEval).probs.value();
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(all.at(0, j), alone.at(0, j)) << seq_len;
      }
    }
  }
}

TEST(Forward, OovTokensAreSampledOnceAndCached) {
  NliModel m = small_model(EncoderKind::kBtree);
  const std::size_t before = m.embeddings().size();
  const auto batch = one_batch({make_pair("a zebra", "a quokka", 0)}, 12);
  Tape t1, t2;
  const Tensor p1 = m.forward(t1, batch, NormMode::kEval).probs.value();
  EXPECT_EQ(m.embeddings().size(), before + 2);
  const Tensor p2 = m.forward(t2, batch, NormMode::kEval).probs.value();
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(m.embeddings().size(), before + 2);
}

TEST(Forward, UnsharedEncodersRun) {
  ModelConfig c = small_config(EncoderKind::kBilstm);
  c.share_encoder = false;
  c.share_transform = false;
  NliModel m(c, small_table(c));
  Tape tape;
  auto out = m.forward(tape, one_batch(few_pairs(), 12), NormMode::kTrain);
  tape.backward(*out.loss);
  for (Parameter* p : m.parameters()) {
    if (p->name.starts_with("encoder.hypothesis")) {
      double s = 0.0;
      for (double g : p->grad.data()) s += std::abs(g);
      EXPECT_GT(s, 0.0) << p->name;
    }
  }
}

// Whole-model gradient check: every parameter, loss through all components.
void end_to_end_gradcheck(EncoderKind kind, InternalInput internal) {
  ModelConfig c = small_config(kind);
  c.btree_internal_input = internal;
  // Larger scale factors keep the operator-network gradients well above
  // the finite-difference noise floor.
  c.bn_gamma_init = 0.5;
  NliModel m(c, small_table(c));
  const auto pairs = std::vector<SentencePair>{make_pair("a man sleeping", "the man running", 0),
                                               make_pair("a happy dog", "a sad cat", 2)};
  const Batch batch = one_batch(pairs, 12);
  m.index_tokens(batch);
  auto params = m.parameters();
  auto f = [&](Tape& tape) { return *m.forward(tape, batch, NormMode::kBatchStatsOnly).loss; };
  const auto rep = gradcheck_parameters(f, params);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst;
  EXPECT_GT(rep.coordinates, 100u);
}

TEST(Gradcheck, EndToEndBilstm) { end_to_end_gradcheck(EncoderKind::kBilstm, InternalInput::kZero); }
TEST(Gradcheck, EndToEndBtree) { end_to_end_gradcheck(EncoderKind::kBtree, InternalInput::kZero); }
TEST(Gradcheck, EndToEndBtreeSpanMean) {
  end_to_end_gradcheck(EncoderKind::kBtree, InternalInput::kSpanMean);
}

// ---------------------------------------------------------------------------
// Optimisation

TEST(Training, LossDecreasesOnRepeatedSample) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    NliModel m = small_model(kind);
    Adam opt(m.parameters());
    const Batch batch = one_batch({make_pair("a dog is running outside", "a cat is sleeping", 2)}, 12);
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 30; ++step) {
      Tape tape;
      auto out = m.forward(tape, batch, NormMode::kTrain);
      const double loss = out.loss->value().item();
      EXPECT_LT(loss, previous) << "step " << step;
      previous = loss;
      opt.zero_grad();
      tape.backward(*out.loss);
      opt.step();
    }
  }
}

TEST(Training, FrozenEmbeddingsNeverChange) {
  NliModel m = small_model(EncoderKind::kBtree);
  Adam opt(m.parameters(), AdamOptions{0.01});
  const std::size_t dog = m.embeddings().index("dog");
  std::vector<double> before(4), after(4);
  m.embeddings().copy_row(dog, before);
  const Batch batch = one_batch(few_pairs(), 12);
  for (int step = 0; step < 100; ++step) {
    Tape tape;
    auto out = m.forward(tape, batch, NormMode::kTrain);
    opt.zero_grad();
    tape.backward(*out.loss);
    opt.step();
  }
  m.embeddings().copy_row(dog, after);
  EXPECT_EQ(before, after);
}

TEST(Training, BatchStatisticsModesNeedTwoPairs) {
  ModelConfig c = small_config(EncoderKind::kBtree);
  NliModel m(c, small_table(c));
  // One single-token hypothesis gives one aligned pair.
  const Batch batch = one_batch({make_pair("a dog", "dog", 0)}, 12);
  Tape t1;
  EXPECT_THROW(m.forward(t1, batch, NormMode::kTrain), ArgumentError);
  Tape t2;
  EXPECT_NO_THROW(m.forward(t2, batch, NormMode::kEval));
}

}  // namespace
}  // namespace compnli
