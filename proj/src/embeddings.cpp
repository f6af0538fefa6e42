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

#include "compnli/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <mutex>

#include "compnli/init.hpp"
#include "compnli/ops.hpp"
#include "compnli/rng.hpp"

namespace compnli {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view field, double& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_count(std::string_view field, std::size_t& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

constexpr std::size_t kMaxListedWarnings = 20;

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const std::string lowered = to_lower(text);
  for (std::string_view chunk : split_fields(lowered)) {
    std::size_t lo = 0, hi = chunk.size();
    while (lo < hi && is_ascii_punct(chunk[lo])) tokens.emplace_back(1, chunk[lo++]);
    std::size_t trail = hi;
    while (trail > lo && is_ascii_punct(chunk[trail - 1])) --trail;
    if (trail > lo) tokens.emplace_back(chunk.substr(lo, trail - lo));
    for (std::size_t i = trail; i < hi; ++i) tokens.emplace_back(1, chunk[i]);
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() { add(kPadToken); }

std::size_t Vocabulary::add(std::string_view token) {
  std::string key(token);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t oov_seed, double oov_stddev)
    : dim_(dim), oov_seed_(oov_seed), oov_stddev_(oov_stddev) {
  if (dim == 0) throw ArgumentError("embedding dimension must be positive");
  if (!(oov_stddev >= 0.0)) throw ArgumentError("OOV standard deviation must be non-negative");
  rows_.emplace_back(dim, 0.0);  // PAD
  oov_.push_back(false);
}

EmbeddingTable::EmbeddingTable(EmbeddingTable&& other) noexcept
    : dim_(other.dim_), oov_seed_(other.oov_seed_), oov_stddev_(other.oov_stddev_) {
  std::unique_lock lock(other.mutex_);
  vocab_ = std::move(other.vocab_);
  rows_ = std::move(other.rows_);
  oov_ = std::move(other.oov_);
  oov_count_ = other.oov_count_;
}

std::size_t EmbeddingTable::insert_locked(std::string_view token, std::vector<double> values,
                                          bool oov) {
  const std::size_t id = vocab_.add(token);
  rows_.push_back(std::move(values));
  oov_.push_back(oov);
  if (oov) ++oov_count_;
  return id;
}

bool EmbeddingTable::add_row(std::string_view token, std::span<const double> values) {
  if (values.size() != dim_) {
    throw DimensionError("embedding row for '" + std::string(token) + "' has " +
                         std::to_string(values.size()) + " values, expected " +
                         std::to_string(dim_));
  }
  const std::string key = to_lower(token);
  std::unique_lock lock(mutex_);
  if (vocab_.find(key)) return false;
  insert_locked(key, {values.begin(), values.end()}, false);
  return true;
}

void EmbeddingTable::restore_oov_row(std::string_view token, std::span<const double> values) {
  if (values.size() != dim_) throw DimensionError("OOV row has the wrong dimension");
  const std::string key = to_lower(token);
  std::unique_lock lock(mutex_);
  if (auto id = vocab_.find(key)) {
    if (!oov_[*id]) throw ArgumentError("'" + key + "' is already a frozen row");
    rows_[*id].assign(values.begin(), values.end());
    return;
  }
  insert_locked(key, {values.begin(), values.end()}, true);
}

std::vector<double> EmbeddingTable::sample_oov(std::string_view token) const {
  // Seeded per token so that the vector a token receives does not depend on
  // which tokens were looked up before it.
  Rng rng(oov_seed_ * 0x9e3779b97f4a7c15ULL ^ fnv1a64(token));
  std::vector<double> values(dim_);
  for (double& v : values) v = rng.normal(0.0, oov_stddev_);
  return values;
}

std::size_t EmbeddingTable::index(std::string_view token) {
  const std::string key = to_lower(token);
  {
    std::shared_lock lock(mutex_);
    if (auto id = vocab_.find(key)) return *id;
  }
  std::vector<double> values = sample_oov(key);
  std::unique_lock lock(mutex_);
  if (auto id = vocab_.find(key)) return *id;  // another thread won the race
  return insert_locked(key, std::move(values), true);
}

Tensor EmbeddingTable::lookup(std::string_view token) {
  Tensor out({dim_});
  copy_row(index(token), out.data());
  return out;
}

void EmbeddingTable::copy_row(std::size_t index, std::span<double> out) const {
  std::shared_lock lock(mutex_);
  if (index >= rows_.size()) throw ArgumentError("embedding row index out of range");
  if (out.size() != dim_) throw DimensionError("copy_row: output has the wrong length");
  std::copy(rows_[index].begin(), rows_[index].end(), out.begin());
}

bool EmbeddingTable::is_oov(std::size_t index) const {
  std::shared_lock lock(mutex_);
  return oov_.at(index);
}

std::string EmbeddingTable::token(std::size_t index) const {
  std::shared_lock lock(mutex_);
  return vocab_.token(index);
}

std::size_t EmbeddingTable::size() const {
  std::shared_lock lock(mutex_);
  return rows_.size();
}

std::size_t EmbeddingTable::frozen_rows() const {
  std::shared_lock lock(mutex_);
  return rows_.size() - 1 - oov_count_;
}

std::size_t EmbeddingTable::oov_rows() const {
  std::shared_lock lock(mutex_);
  return oov_count_;
}

std::vector<EmbeddingTable::RowView> EmbeddingTable::rows_by_token() const {
  std::shared_lock lock(mutex_);
  std::vector<RowView> out;
  out.reserve(rows_.size() - 1);
  for (std::size_t i = 1; i < rows_.size(); ++i) out.push_back({vocab_.token(i), rows_[i], oov_[i]});
  std::sort(out.begin(), out.end(),
            [](const RowView& a, const RowView& b) { return a.token < b.token; });
  return out;
}

// ---------------------------------------------------------------------------
// Loader

EmbeddingLoadReport load_embeddings(const std::filesystem::path& path, EmbeddingTable& table,
                                    const std::unordered_set<std::string>* keep) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read embeddings file " + path.string());

  EmbeddingLoadReport report;
  const std::size_t dim = table.dim();
  std::size_t multiword = 0, duplicates = 0;
  std::vector<double> values(dim);
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) {
      ++report.skipped;
      continue;
    }
    std::size_t header_count = 0, header_dim = 0;
    if (line_no == 1 && fields.size() == 2 && dim != 1 && parse_count(fields[0], header_count) &&
        parse_count(fields[1], header_dim)) {
      if (header_dim != dim) {
        throw ParseError(path.string() + ":1: header declares dimension " +
                         std::to_string(header_dim) + ", expected " + std::to_string(dim));
      }
      ++report.skipped;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() < dim + 1) {
      throw ParseError(where + "expected " + std::to_string(dim) + " values, found " +
                       std::to_string(fields.size() - 1));
    }
    if (fields.size() > dim + 1) {
      double probe = 0.0;
      if (parse_double(fields[1], probe)) {
        throw ParseError(where + "expected " + std::to_string(dim) + " values, found " +
                         std::to_string(fields.size() - 1));
      }
      // The trailing fields are the vector, so the token itself has spaces.
      ++report.skipped;
      if (++multiword <= kMaxListedWarnings) {
        report.warnings.push_back(where + "token contains spaces, line skipped");
      }
      continue;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], values[i])) {
        throw ParseError(where + "cannot parse value '" + std::string(fields[i + 1]) + "'");
      }
    }
    if (keep != nullptr && !keep->contains(to_lower(fields[0]))) continue;
    if (table.add_row(fields[0], values)) {
      ++report.rows;
    } else {
      ++report.skipped;
      ++duplicates;
    }
  }
  if (in.bad()) throw IoError("error while reading " + path.string());

  if (multiword > kMaxListedWarnings) {
    report.warnings.push_back(std::to_string(multiword) + " lines with multi-word tokens skipped");
  }
  if (duplicates > 0) {
    report.warnings.push_back(std::to_string(duplicates) +
                              " tokens duplicated after lowercasing; first occurrence kept");
  }
  if (line_no == 0 || report.rows == 0) {
    report.warnings.push_back("no embeddings loaded from " + path.string() +
                              "; every token will be treated as out of vocabulary");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Transform

EmbeddingTransform::EmbeddingTransform(std::string name, std::size_t dim, Rng& rng)
    : weight_(name + ".W", xavier_uniform(dim, dim, rng)), bias_(name + ".b", Tensor({dim})) {}

Var EmbeddingTransform::apply(Tape& tape, Var words) const {
  const std::size_t dim = weight_.value.rows();
  if (words.value().rank() != 2 || words.cols() != dim) {
    throw DimensionError("embedding transform expects [n x " + std::to_string(dim) + "], got " +
                         shape_string(words.shape()));
  }
  return sigmoid(add_bias(matmul(words, tape.param(weight_)), tape.param(bias_)));
}

Tensor EmbeddingTransform::apply(const Tensor& word) const {
  const std::size_t dim = weight_.value.rows();
  if (word.rank() != 1 || word.size() != dim) {
    throw DimensionError("embedding transform expects [" + std::to_string(dim) + "], got " +
                         shape_string(word.shape()));
  }
  Tape tape;
  Var out = apply(tape, tape.constant(Tensor({1, dim}, {word.data().begin(), word.data().end()})));
  return Tensor({dim}, {out.value().data().begin(), out.value().data().end()});
}

}  // namespace compnli
