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

#include "compnli/data.hpp"

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "compnli/classifier.hpp"
#include "compnli/config.hpp"
#include "compnli/embeddings.hpp"
#include "test_util.hpp"

namespace compnli {
namespace {

using testing::TempDir;

std::string record(const std::string& label, const std::string& s1, const std::string& s2) {
  return R"({"gold_label": ")" + label + R"(", "sentence1": ")" + s1 + R"(", "sentence2": ")" +
         s2 + R"(", "pairID": "x"})" + "\n";
}

std::vector<SentencePair> numbered_pairs(std::size_t n) {
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_pair("premise " + std::to_string(i), "hypothesis", static_cast<int>(i % 3)));
  }
  return out;
}

TEST(Snli, ThreeRecordFixture) {
  TempDir dir;
  const auto path = dir.file("snli.jsonl", record("entailment", "A man sleeps.", "A man rests.") +
                                               record("neutral", "A dog runs.", "A dog runs fast.") +
                                               record("contradiction", "It rains.", "It is dry."));
  SnliReport report;
  const auto pairs = load_snli(path, &report);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(label_histogram(pairs), (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(report.records, 3u);
  EXPECT_EQ(pairs[0].premise, (std::vector<std::string>{"a", "man", "sleeps", "."}));
  EXPECT_EQ(pairs[0].premise_text, "A man sleeps.");
  EXPECT_EQ(pairs[2].gold, 2);
}

TEST(Snli, UnlabelledRecordsAreSkipped) {
  std::istringstream in(record("-", "a", "b") + "\n" + record("neutral", "a b", "c") +
                        record("-", "c", "d"));
  SnliReport report;
  const auto pairs = read_snli(in, "mem", &report);
  EXPECT_EQ(pairs.size(), 1u);
  EXPECT_EQ(report.skipped_no_label, 2u);
  EXPECT_EQ(report.records, 3u);
  EXPECT_EQ(report.pairs, 1u);
}

TEST(Snli, MalformedRecordNamesTheLine) {
  const std::string bad = R"({"gold_label": "neutral", "sentence1": "a"})" "\n";
  const std::string text = record("neutral", "a", "b") + bad;
  std::istringstream in(text);
  try {
    read_snli(in, "dev.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("dev.jsonl:2:"), std::string::npos) << what;
    EXPECT_NE(what.find("sentence2"), std::string::npos) << what;
  }
}

TEST(Snli, LenientModeCountsFailures) {
  std::istringstream in(record("neutral", "a", "b") + "{not json\n" + record("maybe", "a", "b") +
                        record("entailment", "...", "") + R"({"gold_label": 3})" "\n" +
                        record("entailment", "x", "y"));
  SnliReport report;
  const auto pairs = read_snli(in, "mem", &report, false);
  EXPECT_EQ(pairs.size(), 2u);
  EXPECT_EQ(report.parse_failures, 4u);
}

TEST(Snli, UnknownLabelAndEmptySideAreErrors) {
  std::istringstream a(record("maybe", "a", "b"));
  EXPECT_THROW(read_snli(a, "mem"), ParseError);
  std::istringstream b(record("neutral", "a", "   "));
  EXPECT_THROW(read_snli(b, "mem"), ParseError);
}

TEST(Snli, MissingFile) {
  TempDir dir;
  EXPECT_THROW(load_snli(dir.path() / "absent.jsonl"), IoError);
}

TEST(Labels, IndexAndNameAreInverse) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const std::string name(label_name(static_cast<int>(i)));
    names.insert(name);
    ASSERT_TRUE(label_index(name).has_value());
    EXPECT_EQ(*label_index(name), static_cast<int>(i));
  }
  EXPECT_EQ(names.size(), kNumLabels);
  EXPECT_FALSE(label_index("Entailment").has_value());
}

TEST(Batching, HundredPairsInBatchesOfForty) {
  const auto pairs = numbered_pairs(100);
  const auto batches = make_batches(pairs, 40, 64, std::nullopt);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 40u);
  EXPECT_EQ(batches[1].size(), 40u);
  EXPECT_EQ(batches[2].size(), 20u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(batches[1].indices[i], 40 + i);
}

TEST(Batching, LongSentencesAreTruncatedAndCounted) {
  std::string long_text;
  for (int i = 0; i < 70; ++i) long_text += "w" + std::to_string(i) + " ";
  std::vector<SentencePair> pairs{make_pair(long_text, "short one", 0), make_pair("a", "b", 1)};
  BatchingReport report;
  const auto batches = make_batches(pairs, 40, 64, std::nullopt, &report);
  EXPECT_EQ(report.truncated, 1u);
  const auto tokens = batches[0].premise_tokens(0);
  ASSERT_EQ(tokens.size(), 64u);
  EXPECT_EQ(tokens.back(), "w63");
  EXPECT_EQ(batches[0].premise[0].size(), 64u);
}

TEST(Batching, PaddingAndMasks) {
  const auto batches = make_batches({make_pair("a big dog", "a dog", 0)}, 1, 5, std::nullopt);
  const Batch& b = batches[0];
  EXPECT_EQ(b.premise[0], (std::vector<std::string>{"a", "big", "dog", "<pad>", "<pad>"}));
  EXPECT_EQ(b.premise_mask[0], (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
  EXPECT_EQ(b.hypothesis_tokens(0), (std::vector<std::string>{"a", "dog"}));
  EXPECT_EQ(b.gold, (std::vector<int>{0}));
}

TEST(Batching, SeededShuffleIsReproducibleAndCoversEveryPair) {
  const auto pairs = numbered_pairs(103);
  const auto a = make_batches(pairs, 10, 8, 5u);
  const auto b = make_batches(pairs, 10, 8, 5u);
  const auto c = make_batches(pairs, 10, 8, 6u);
  std::vector<std::size_t> ia, ib, ic;
  for (const auto& x : a) ia.insert(ia.end(), x.indices.begin(), x.indices.end());
  for (const auto& x : b) ib.insert(ib.end(), x.indices.begin(), x.indices.end());
  for (const auto& x : c) ic.insert(ic.end(), x.indices.begin(), x.indices.end());
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
  std::multiset<std::size_t> seen(ia.begin(), ia.end());
  ASSERT_EQ(seen.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(seen.count(i), 1u) << i;
  for (const auto& batch : a) {
    for (std::size_t k = 0; k < batch.size(); ++k) EXPECT_EQ(batch.gold[k], pairs[batch.indices[k]].gold);
  }
}

TEST(Batching, InvalidArguments) {
  EXPECT_THROW(make_batches(numbered_pairs(2), 0, 8, std::nullopt), ArgumentError);
  EXPECT_THROW(make_batches(numbered_pairs(2), 2, 0, std::nullopt), ArgumentError);
  EXPECT_TRUE(make_batches({}, 4, 8, std::nullopt).empty());
}

TEST(MakePair, EmptySideRejected) {
  EXPECT_THROW(make_pair("", "a"), ArgumentError);
  EXPECT_THROW(make_pair("a", " \t "), ArgumentError);
}

}  // namespace
}  // namespace compnli
