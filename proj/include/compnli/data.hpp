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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace compnli {

struct SentencePair {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  int gold = -1;  // label index, -1 when unknown
  std::string premise_text;
  std::string hypothesis_text;

  bool has_gold() const { return gold >= 0; }
};

/// Tokenises both sentences. Throws ArgumentError when either side has no
/// tokens.
SentencePair make_pair(std::string premise, std::string hypothesis, int gold = -1);

struct SnliReport {
  std::size_t records = 0;           // non-blank lines read
  std::size_t pairs = 0;             // pairs returned
  std::size_t skipped_no_label = 0;  // gold_label "-"
  std::size_t parse_failures = 0;    // only counted when not strict
};

/// Reads SNLI-style jsonl: one object per line with string fields
/// gold_label, sentence1 and sentence2. Records labelled "-" are skipped.
///
/// In strict mode a malformed record throws ParseError naming the line;
/// otherwise it is counted and skipped. An unreadable file throws IoError.
std::vector<SentencePair> load_snli(const std::filesystem::path& path, SnliReport* report = nullptr,
                                    bool strict = true);
std::vector<SentencePair> read_snli(std::istream& in, const std::string& source,
                                    SnliReport* report = nullptr, bool strict = true);

/// Counts per label in label order.
std::array<std::size_t, 3> label_histogram(const std::vector<SentencePair>& pairs);

/// A mini-batch padded to a fixed sequence length.
struct Batch {
  std::vector<std::size_t> indices;  // positions in the source list
  std::size_t seq_len = 0;
  std::vector<std::vector<std::string>> premise;     // padded with the PAD token
  std::vector<std::vector<std::string>> hypothesis;  // padded with the PAD token
  std::vector<std::vector<std::uint8_t>> premise_mask;
  std::vector<std::vector<std::uint8_t>> hypothesis_mask;
  std::vector<int> gold;

  std::size_t size() const { return indices.size(); }
  /// Real tokens of item i.
  std::vector<std::string> premise_tokens(std::size_t i) const;
  std::vector<std::string> hypothesis_tokens(std::size_t i) const;
};

struct BatchingReport {
  std::size_t truncated = 0;  // sentences cut to seq_len
};

/// Splits `pairs` into batches of `batch_size` (the last one may be
/// smaller). With a seed the order is shuffled deterministically; without
/// one the input order is kept. Sentences longer than seq_len are truncated.
std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs, std::size_t batch_size,
                                std::size_t seq_len, std::optional<std::uint64_t> shuffle_seed,
                                BatchingReport* report = nullptr);

}  // namespace compnli
