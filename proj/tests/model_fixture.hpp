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

#include <string>
#include <vector>

#include "compnli/model.hpp"
#include "compnli/rng.hpp"

namespace compnli::testing {

inline const std::vector<std::string>& small_words() {
  static const std::vector<std::string> words{
      "a", "the", "man", "woman", "dog", "cat", "is", "not", "sleeping", "running",
      "eating", "outside", "inside", "happy", "sad", "park", "."};
  return words;
}

// Every dimension cut down so whole-model checks stay fast.
inline ModelConfig small_config(EncoderKind kind) {
  ModelConfig c;
  c.encoder = kind;
  c.word_dim = 4;
  c.bilstm_hidden = 3;
  c.btree_hidden = 3;
  c.operators = 3;
  c.op_hidden = 3;
  c.op_out = 3;
  c.agg_hidden = 3;
  c.batch_size = 4;
  c.seq_len = 12;
  return c;
}

inline EmbeddingTable small_table(const ModelConfig& c, std::uint64_t seed = 99) {
  EmbeddingTable table = make_embedding_table(c);
  Rng rng(seed);
  for (const auto& w : small_words()) {
    std::vector<double> row(c.word_dim);
    for (double& v : row) v = rng.uniform(-1.0, 1.0);
    table.add_row(w, row);
  }
  return table;
}

inline NliModel small_model(EncoderKind kind) {
  ModelConfig c = small_config(kind);
  return NliModel(c, small_table(c));
}

}  // namespace compnli::testing
