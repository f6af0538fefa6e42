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

#include "cli.hpp"

#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "compnli/rng.hpp"
#include "model_fixture.hpp"
#include "test_util.hpp"

namespace compnli {
namespace {

using testing::TempDir;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "compnli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream s(text);
  for (std::string line; std::getline(s, line);) out.push_back(line);
  return out;
}

std::string jsonl() {
  return R"({"gold_label": "entailment", "sentence1": "A man is sleeping.", "sentence2": "A man is sleeping."})" "\n"
         R"({"gold_label": "contradiction", "sentence1": "A dog is happy.", "sentence2": "A dog is sad."})" "\n"
         R"({"gold_label": "-", "sentence1": "A cat.", "sentence2": "A dog."})" "\n"
         R"({"gold_label": "neutral", "sentence1": "A woman is eating.", "sentence2": "A woman is eating outside."})" "\n";
}

// Small model trained for a couple of epochs; shared by the tests below.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    data_ = dir_->file("train.jsonl", jsonl());
    std::string emb = "4 4\n";
    Rng rng(5);
    for (const char* w : {"a", "man", "is", "sleeping", "dog", "happy", "sad", "woman", "eating"}) {
      emb += w;
      for (int i = 0; i < 4; ++i) emb += " " + std::to_string(rng.uniform(-1.0, 1.0));
      emb += "\n";
    }
    embeddings_ = dir_->file("vectors.txt", emb);
    config_ = dir_->file("small.cfg",
                         "# tiny model\nword_dim=4\nbtree_hidden=3\nbilstm_hidden=3\noperators=2\n"
                         "op_hidden=3\nop_out=3\nagg_hidden=3\nbatch_size=2\nmax_epochs=2\n");
    checkpoint_ = dir_->path() / "model.ckpt";
    train_run_ = new CliRun(run({"train", "--train", data_.string(), "--dev", data_.string(),
                              "--embeddings", embeddings_.string(), "--encoder", "btree",
                              "--config", config_.string(), "--checkpoint-out",
                              checkpoint_.string()}));
  }
  static void TearDownTestSuite() {
    delete train_run_;
    delete dir_;
  }

  static inline TempDir* dir_ = nullptr;
  static inline CliRun* train_run_ = nullptr;
  static inline std::filesystem::path data_, embeddings_, config_, checkpoint_;
};

TEST_F(CliTest, TrainWritesEpochLogAndCheckpoint) {
  ASSERT_EQ(train_run_->code, kExitOk) << train_run_->err;
  const auto lines = lines_of(train_run_->out);
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0].rfind("epoch\t", 0), 0u);
  EXPECT_EQ(lines[1].rfind("1\t", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(checkpoint_));
  EXPECT_NE(train_run_->err.find("parameters: "), std::string::npos);
}

TEST_F(CliTest, EvalPrintsMetricsLine) {
  const CliRun r = run({"eval", "--checkpoint", checkpoint_.string(), "--data", data_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_TRUE(std::regex_match(lines[0], std::regex(
      "examples=3\tloss=[0-9.]+\taccuracy=[0-9.]+\tentailment=[0-9.]+\tneutral=[0-9.]+"
      "\tcontradiction=[0-9.]+")))
      << lines[0];
}

TEST_F(CliTest, InferWritesOneLinePerPair) {
  const CliRun r = run({"infer", "--checkpoint", checkpoint_.string()},
                    "A man is sleeping.\tA man is happy.\n\nA dog.\tA zebra!\r\n");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 2u);
  const std::regex format("(entailment|neutral|contradiction)\t([01]\\.\\d{6})\t([01]\\.\\d{6})\t([01]\\.\\d{6})");
  for (const auto& line : lines) {
    std::smatch m;
    ASSERT_TRUE(std::regex_match(line, m, format)) << line;
    const double s = std::stod(m[2]) + std::stod(m[3]) + std::stod(m[4]);
    EXPECT_NEAR(s, 1.0, 2e-6);
  }
}

TEST_F(CliTest, InferRejectsMalformedLines) {
  CliRun r = run({"infer", "--checkpoint", checkpoint_.string()}, "a b\tc\nno tab here\n");
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("stdin:2"), std::string::npos) << r.err;
  r = run({"infer", "--checkpoint", checkpoint_.string()}, "...\t \n");
  EXPECT_EQ(r.code, kExitData);
}

TEST_F(CliTest, AlignWritesWeightsAndGates) {
  const CliRun r = run({"align", "--checkpoint", checkpoint_.string(), "--premise", "A man sleeps",
                     "--hypothesis", "A man"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  // Tree encodings: 3 hypothesis rows over 5 premise columns, then 3 gate rows.
  ASSERT_EQ(lines.size(), 1u + 3u + 1u + 3u) << r.out;
  EXPECT_EQ(lines[0], "# premise: a man sleeps\thypothesis: a man");
  for (std::size_t i = 1; i <= 3; ++i) {
    std::istringstream row(lines[i]);
    double v, s = 0.0;
    std::size_t n = 0;
    while (row >> v) { s += v; ++n; }
    EXPECT_EQ(n, 5u);
    EXPECT_NEAR(s, 1.0, 5e-6);
  }
  EXPECT_EQ(lines[4], "# gates");
  std::istringstream gate(lines[5]);
  double g0, g1;
  ASSERT_TRUE(gate >> g0 >> g1);
  EXPECT_NEAR(g0 + g1, 1.0, 2e-6);
}

TEST_F(CliTest, DataAndIntegrityErrorsExitWithTwo) {
  EXPECT_EQ(run({"eval", "--checkpoint", (dir_->path() / "absent").string(), "--data",
                 data_.string()}).code, kExitData);
  const auto bad = dir_->file("bad.ckpt", "CNLI but not really a checkpoint");
  const CliRun r = run({"eval", "--checkpoint", bad.string(), "--data", data_.string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("integrity error"), std::string::npos) << r.err;
  const auto broken = dir_->file("broken.jsonl", "{\"gold_label\": \"neutral\"}\n");
  EXPECT_EQ(run({"eval", "--checkpoint", checkpoint_.string(), "--data", broken.string()}).code,
            kExitData);
  const auto cfg = dir_->file("bad.cfg", "colour=blue\n");
  EXPECT_EQ(run({"train", "--train", data_.string(), "--dev", data_.string(), "--embeddings",
                 embeddings_.string(), "--encoder", "bilstm", "--config", cfg.string()}).code,
            kExitData);
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"fly"}).code, kExitUsage);
  const CliRun r = run({"train", "--train", "t", "--dev", "d", "--encoder", "btree"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--embeddings"), std::string::npos) << r.err;
  EXPECT_EQ(run({"train", "--train", "t", "--dev", "d", "--embeddings", "e", "--encoder", "cnn"}).code,
            kExitUsage);
  EXPECT_EQ(run({"eval", "--checkpoint", "c", "--data", "d", "--verbose"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

}  // namespace
}  // namespace compnli
