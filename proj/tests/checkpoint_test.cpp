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

#include "compnli/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "model_fixture.hpp"
#include "test_util.hpp"

namespace compnli {
namespace {

using testing::small_config;
using testing::small_table;
using testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<SentencePair> pairs() {
  return {make_pair("a man is sleeping", "a man is running", 2),
          make_pair("the dog is outside", "a dog is in a park", 1),
          make_pair("a happy woman", "a woman", 0)};
}

// A model with a few training steps behind it and some OOV rows cached.
struct Trained {
  explicit Trained(EncoderKind kind) : model(small_config(kind), small_table(small_config(kind))) {
    opt = make_optimizer(model);
    const Batch batch = make_batches(pairs(), 3, 12, std::nullopt).at(0);
    for (int i = 0; i < 3; ++i) {
      Tape tape;
      auto out = model.forward(tape, batch, NormMode::kTrain);
      opt->zero_grad();
      tape.backward(*out.loss);
      opt->step();
    }
  }
  NliModel model;
  std::unique_ptr<Adam> opt;
};

Tensor predictions(NliModel& m) {
  Tape tape;
  return m.forward(tape, make_batches(pairs(), 3, 12, std::nullopt).at(0), NormMode::kEval)
      .probs.value();
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  for (EncoderKind kind : {EncoderKind::kBilstm, EncoderKind::kBtree}) {
    TempDir dir;
    Trained t(kind);
    ASSERT_GT(t.model.embeddings().oov_rows(), 0u);
    save_checkpoint(dir.path() / "a.ckpt", t.model, t.opt.get());
    auto loaded = load_checkpoint(dir.path() / "a.ckpt");
    ASSERT_TRUE(loaded.optimizer);
    save_checkpoint(dir.path() / "b.ckpt", *loaded.model, loaded.optimizer.get());
    EXPECT_EQ(slurp(dir.path() / "a.ckpt"), slurp(dir.path() / "b.ckpt"));
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "a.ckpt.tmp"));
  }
}

TEST(Checkpoint, RestoresPredictionsAndOptimizerState) {
  TempDir dir;
  Trained t(EncoderKind::kBtree);
  save_checkpoint(dir.path() / "m.ckpt", t.model, t.opt.get());
  auto loaded = load_checkpoint(dir.path() / "m.ckpt");
  EXPECT_EQ(loaded.model->config(), t.model.config());
  EXPECT_EQ(predictions(*loaded.model), predictions(t.model));
  EXPECT_EQ(loaded.optimizer->steps(), 3u);
  for (std::size_t i = 0; i < t.opt->params().size(); ++i) {
    EXPECT_EQ(loaded.optimizer->first_moment(i), t.opt->first_moment(i));
    EXPECT_EQ(loaded.optimizer->second_moment(i), t.opt->second_moment(i));
  }
  auto a = t.model.norms(), b = loaded.model->norms();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->running_mean, b[i]->running_mean);
    EXPECT_EQ(a[i]->running_var, b[i]->running_var);
  }
}

TEST(Checkpoint, WithoutOptimizerState) {
  TempDir dir;
  Trained t(EncoderKind::kBilstm);
  save_checkpoint(dir.path() / "m.ckpt", t.model);
  auto loaded = load_checkpoint(dir.path() / "m.ckpt");
  EXPECT_FALSE(loaded.optimizer);
  EXPECT_EQ(predictions(*loaded.model), predictions(t.model));
}

TEST(Checkpoint, EveryFlippedByteIsDetected) {
  ModelConfig c = small_config(EncoderKind::kBtree);
  c.btree_hidden = 1;
  c.word_dim = 2;
  c.op_hidden = c.op_out = c.agg_hidden = 1;
  c.operators = 1;
  NliModel m(c, make_embedding_table(c));
  TempDir dir;
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, m);
  const std::string good = slurp(path);
  for (std::size_t i = 0; i < good.size(); ++i) {
    std::string bad = good;
    bad[i] = static_cast<char>(bad[i] ^ 0x10);
    std::ofstream(path, std::ios::binary) << bad;
    EXPECT_THROW(load_checkpoint(path), IntegrityError) << "byte " << i;
  }
}

TEST(Checkpoint, TruncationIsDetected) {
  TempDir dir;
  Trained t(EncoderKind::kBtree);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, t.model);
  const std::string good = slurp(path);
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{19}, good.size() / 2,
                           good.size() - 1}) {
    std::ofstream(path, std::ios::binary) << good.substr(0, keep);
    EXPECT_THROW(load_checkpoint(path), IntegrityError) << keep;
  }
}

TEST(Checkpoint, VersionMismatch) {
  TempDir dir;
  Trained t(EncoderKind::kBtree);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, t.model);
  const auto contents = decode_checkpoint(slurp(path));
  std::ofstream(path, std::ios::binary) << encode_checkpoint(contents, kCheckpointVersion + 1);
  EXPECT_THROW(load_checkpoint(path), VersionError);
}

TEST(Checkpoint, MissingOrExtraTensors) {
  TempDir dir;
  Trained t(EncoderKind::kBtree);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, t.model, t.opt.get());
  const auto contents = decode_checkpoint(slurp(path));
  for (const std::string& name :
       {std::string("param/aggregator.classifier.W"), std::string("bn.var/bank.op0.bn1"),
        std::string("adam.m/transform.b")}) {
    auto c = contents;
    ASSERT_EQ(c.tensors.erase(name), 1u) << name;
    std::ofstream(path, std::ios::binary) << encode_checkpoint(c);
    try {
      load_checkpoint(path);
      ADD_FAILURE() << "loaded without " << name;
    } catch (const IntegrityError& e) {
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
    }
  }
  auto c = contents;
  c.tensors.emplace("param/stray", Tensor::vector({1.0}));
  std::ofstream(path, std::ios::binary) << encode_checkpoint(c);
  EXPECT_THROW(load_checkpoint(path), IntegrityError);

  c = contents;
  c.tensors.at("param/transform.W") = Tensor::vector({1.0, 2.0});
  std::ofstream(path, std::ios::binary) << encode_checkpoint(c);
  EXPECT_THROW(load_checkpoint(path), IntegrityError);
}

TEST(Checkpoint, LabelOrderIsChecked) {
  TempDir dir;
  Trained t(EncoderKind::kBtree);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, t.model);
  auto c = decode_checkpoint(slurp(path));
  const auto at = c.text.find("labels=");
  ASSERT_NE(at, std::string::npos);
  c.text = c.text.substr(0, at) + "labels=neutral,entailment,contradiction\n";
  std::ofstream(path, std::ios::binary) << encode_checkpoint(c);
  EXPECT_THROW(load_checkpoint(path), VersionError);
}

TEST(Checkpoint, MissingFile) {
  TempDir dir;
  EXPECT_THROW(load_checkpoint(dir.path() / "nope.ckpt"), IoError);
}

}  // namespace
}  // namespace compnli
