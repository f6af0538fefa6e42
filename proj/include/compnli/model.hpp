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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "compnli/attention.hpp"
#include "compnli/batchnorm.hpp"
#include "compnli/classifier.hpp"
#include "compnli/composition.hpp"
#include "compnli/config.hpp"
#include "compnli/data.hpp"
#include "compnli/embeddings.hpp"
#include "compnli/encoders.hpp"

namespace compnli {

/// The full pipeline: embedding transform, encoder, hypothesis-over-premise
/// attention, gated operator bank, aggregation LSTM and classifier.
///
/// A model owns its embedding table. Forward passes may add OOV rows to the
/// table; everything else in the model is only changed by optimizer steps
/// and, in training mode, batch-norm running statistics.
class NliModel {
 public:
  NliModel(ModelConfig config, EmbeddingTable embeddings);

  struct Output {
    Var probs;                          // [B × 3]
    std::optional<Var> loss;            // mean cross entropy, when every item has a gold label
    // Premise b is sentence b, hypothesis b is sentence B + b.
    EncodedBatch encoded;
    std::vector<Alignment> alignments;  // one per batch item
    OperatorBank::Output bank;          // over the stacked pairs of all items
    SequenceLayout pair_layout;         // pairs of item b are rows of bank outputs
  };

  /// Batch-norm training modes need at least two aligned pairs in total.
  Output forward(Tape& tape, const Batch& batch, NormMode mode);

  /// Makes sure every token in the batch has an embedding row (sampling OOV
  /// rows as needed). forward() does this itself.
  void index_tokens(const Batch& batch);

  const ModelConfig& config() const { return config_; }
  EmbeddingTable& embeddings() { return embeddings_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }

  /// All trainable parameters, each once, in construction order.
  std::vector<Parameter*> parameters();
  std::vector<BatchNorm*> norms();
  std::size_t parameter_count();

  struct CountLine {
    std::string group;
    std::size_t count;
  };
  /// Parameter counts per component, for audit output.
  std::vector<CountLine> parameter_breakdown();

 private:
  struct Encoder {
    std::unique_ptr<LstmCellParams> fwd, bwd;
    std::unique_ptr<BtreeLstmParams> tree;
    std::vector<Parameter*> parameters();
  };

  Encoder make_encoder(const std::string& name, Rng& rng) const;
  EncodedBatch encode(Tape& tape, Encoder& enc, Var words, const SequenceLayout& layout,
                      std::size_t steps);
  Var embed(Tape& tape, const Batch& batch, bool premise_side, SequenceLayout& layout);

  ModelConfig config_;
  EmbeddingTable embeddings_;
  std::unique_ptr<EmbeddingTransform> transform_premise_;
  std::unique_ptr<EmbeddingTransform> transform_hypothesis_;  // null when shared
  Encoder encoder_premise_;
  Encoder encoder_hypothesis_;  // empty when shared
  std::unique_ptr<OperatorBank> bank_;
  std::unique_ptr<Aggregator> aggregator_;
};

/// Builds an empty embedding table with the config's dimension and OOV
/// settings.
EmbeddingTable make_embedding_table(const ModelConfig& config);

}  // namespace compnli
