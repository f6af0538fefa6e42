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

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "compnli/classifier.hpp"
#include "compnli/embeddings.hpp"
#include "compnli/rng.hpp"

namespace compnli {
namespace {

std::vector<std::string> real_tokens(const std::vector<std::string>& padded,
                                     const std::vector<std::uint8_t>& mask) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < padded.size(); ++i) {
    if (mask[i]) out.push_back(padded[i]);
  }
  return out;
}

}  // namespace

SentencePair make_pair(std::string premise, std::string hypothesis, int gold) {
  SentencePair p;
  p.premise = tokenize(premise);
  p.hypothesis = tokenize(hypothesis);
  if (p.premise.empty() || p.hypothesis.empty()) {
    throw ArgumentError("sentence pair has an empty side after tokenisation");
  }
  p.gold = gold;
  p.premise_text = std::move(premise);
  p.hypothesis_text = std::move(hypothesis);
  return p;
}

std::vector<SentencePair> read_snli(std::istream& in, const std::string& source,
                                    SnliReport* report, bool strict) {
  SnliReport local;
  SnliReport& r = report ? *report : local;
  r = {};
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++r.records;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    auto fail = [&](const std::string& why) {
      if (strict) throw ParseError(where + why);
      ++r.parse_failures;
    };

    const auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      fail("not a JSON object");
      continue;
    }
    bool ok = true;
    for (const char* field : {"gold_label", "sentence1", "sentence2"}) {
      if (!record.contains(field) || !record[field].is_string()) {
        fail(std::string("missing string field ") + field);
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    const std::string label = record["gold_label"].get<std::string>();
    if (label == "-") {
      ++r.skipped_no_label;
      continue;
    }
    const auto gold = label_index(label);
    if (!gold) {
      fail("unknown gold_label '" + label + "'");
      continue;
    }
    try {
      pairs.push_back(make_pair(record["sentence1"].get<std::string>(),
                                record["sentence2"].get<std::string>(), *gold));
    } catch (const ArgumentError& e) {
      fail(e.what());
    }
  }
  if (in.bad()) throw IoError("error while reading " + source);
  r.pairs = pairs.size();
  return pairs;
}

std::vector<SentencePair> load_snli(const std::filesystem::path& path, SnliReport* report,
                                    bool strict) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_snli(in, path.string(), report, strict);
}

std::array<std::size_t, 3> label_histogram(const std::vector<SentencePair>& pairs) {
  std::array<std::size_t, 3> h{};
  for (const auto& p : pairs) {
    if (p.has_gold()) ++h.at(static_cast<std::size_t>(p.gold));
  }
  return h;
}

std::vector<std::string> Batch::premise_tokens(std::size_t i) const {
  return real_tokens(premise.at(i), premise_mask.at(i));
}

std::vector<std::string> Batch::hypothesis_tokens(std::size_t i) const {
  return real_tokens(hypothesis.at(i), hypothesis_mask.at(i));
}

std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs, std::size_t batch_size,
                                std::size_t seq_len, std::optional<std::uint64_t> shuffle_seed,
                                BatchingReport* report) {
  if (batch_size == 0 || seq_len == 0) throw ArgumentError("batch size and sequence length must be positive");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::size_t truncated = 0;
  auto pad = [&](const std::vector<std::string>& tokens, std::vector<std::string>& out,
                 std::vector<std::uint8_t>& mask) {
    if (tokens.size() > seq_len) ++truncated;
    const std::size_t n = std::min(tokens.size(), seq_len);
    out.assign(seq_len, std::string(Vocabulary::kPadToken));
    mask.assign(seq_len, 0);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = tokens[i];
      mask[i] = 1;
    }
  };

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch& b = batches.emplace_back();
    b.seq_len = seq_len;
    const std::size_t end = std::min(order.size(), start + batch_size);
    for (std::size_t k = start; k < end; ++k) {
      const SentencePair& p = pairs[order[k]];
      b.indices.push_back(order[k]);
      pad(p.premise, b.premise.emplace_back(), b.premise_mask.emplace_back());
      pad(p.hypothesis, b.hypothesis.emplace_back(), b.hypothesis_mask.emplace_back());
      b.gold.push_back(p.gold);
    }
  }
  if (report) report->truncated = truncated;
  return batches;
}

}  // namespace compnli
