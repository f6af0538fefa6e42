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
#include <deque>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

class Rng;

/// ASCII lowercasing; bytes outside A-Z are left alone. Idempotent.
std::string to_lower(std::string_view text);

/// Lowercases, splits on whitespace, then peels leading and trailing ASCII
/// punctuation off each chunk as one-character tokens ("dog." -> "dog", ".").
std::vector<std::string> tokenize(std::string_view text);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Token <-> index map. Index 0 is reserved for padding.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::string_view kPadToken = "<pad>";

  Vocabulary();

  /// Index of `token`, inserting it when absent.
  std::size_t add(std::string_view token);
  std::optional<std::size_t> find(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::deque<std::string> tokens_;
};

struct EmbeddingLoadReport {
  std::size_t rows = 0;
  // Lines dropped because the token was absent from the keep set do not count
  // as skipped.
  std::size_t skipped = 0;  // header, blank, multi-word or duplicate lines
  std::vector<std::string> warnings;
};

/// Frozen word vectors plus lazily sampled vectors for out-of-vocabulary
/// tokens. Every lookup lowercases its token first.
///
/// An OOV vector is drawn from N(0, oov_stddev) with a generator seeded by
/// the table seed and the token text, so the assignment does not depend on
/// lookup order. Sampled rows are cached. Lookups are safe to call from
/// several threads.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::uint64_t oov_seed, double oov_stddev = 0.06);
  EmbeddingTable(EmbeddingTable&& other) noexcept;

  std::size_t dim() const { return dim_; }
  std::uint64_t oov_seed() const { return oov_seed_; }
  double oov_stddev() const { return oov_stddev_; }

  /// Adds a frozen row; returns false when the lowercased token is already
  /// present (the first row wins).
  bool add_row(std::string_view token, std::span<const double> values);
  /// Restores a cached OOV row, e.g. from a checkpoint.
  void restore_oov_row(std::string_view token, std::span<const double> values);

  /// Row index of the token, sampling and caching an OOV row on first sight.
  std::size_t index(std::string_view token);
  Tensor lookup(std::string_view token);
  /// Copies row `index` into `out`.
  void copy_row(std::size_t index, std::span<double> out) const;
  bool is_oov(std::size_t index) const;
  std::string token(std::size_t index) const;

  std::size_t size() const;
  std::size_t frozen_rows() const;
  std::size_t oov_rows() const;

  /// Stable snapshot of rows (token, values, is_oov), ordered by token.
  struct RowView {
    std::string token;
    std::vector<double> values;
    bool oov;
  };
  std::vector<RowView> rows_by_token() const;

 private:
  std::size_t insert_locked(std::string_view token, std::vector<double> values, bool oov);
  std::vector<double> sample_oov(std::string_view token) const;

  std::size_t dim_;
  std::uint64_t oov_seed_;
  double oov_stddev_;
  mutable std::shared_mutex mutex_;
  Vocabulary vocab_;
  std::deque<std::vector<double>> rows_;  // row i belongs to vocabulary index i
  std::deque<bool> oov_;
  std::size_t oov_count_ = 0;
};

/// Reads whitespace-separated "token v1 ... v_dim" lines. A leading
/// "<count> <dim>" header is accepted. When `keep` is given, only tokens in
/// it (lowercased) are stored.
///
/// Throws IoError when the file cannot be read and ParseError naming the
/// line when a line carries the wrong number of values.
EmbeddingLoadReport load_embeddings(const std::filesystem::path& path, EmbeddingTable& table,
                                    const std::unordered_set<std::string>* keep = nullptr);

/// sigmoid(x W + b) applied row-wise to word vectors.
class EmbeddingTransform {
 public:
  EmbeddingTransform(std::string name, std::size_t dim, Rng& rng);

  /// words: [n × dim] -> [n × dim]
  Var apply(Tape& tape, Var words) const;
  /// Single vector convenience form, evaluated on a private tape.
  Tensor apply(const Tensor& word) const;
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  mutable Parameter weight_;
  mutable Parameter bias_;
};

}  // namespace compnli
