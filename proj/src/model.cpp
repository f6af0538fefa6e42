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

#include <algorithm>

#include "compnli/ops.hpp"
#include "compnli/rng.hpp"

namespace compnli {
namespace {

std::size_t count(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->size();
  return n;
}

void append(std::vector<Parameter*>& to, const std::vector<Parameter*>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

EmbeddingTable make_embedding_table(const ModelConfig& config) {
  return EmbeddingTable(config.word_dim, config.oov_seed, config.oov_stddev());
}

std::vector<Parameter*> NliModel::Encoder::parameters() {
  std::vector<Parameter*> out;
  if (fwd) {
    append(out, fwd->parameters());
    append(out, bwd->parameters());
  }
  if (tree) append(out, tree->parameters());
  return out;
}

NliModel::NliModel(ModelConfig config, EmbeddingTable embeddings)
    : config_(std::move(config)), embeddings_(std::move(embeddings)) {
  if (embeddings_.dim() != config_.word_dim) {
    throw DimensionError("embedding table has dimension " + std::to_string(embeddings_.dim()) +
                         ", config expects " + std::to_string(config_.word_dim));
  }
  Rng rng(config_.seed);
  const std::size_t d = config_.word_dim;
  if (config_.share_transform) {
    transform_premise_ = std::make_unique<EmbeddingTransform>("transform", d, rng);
  } else {
    transform_premise_ = std::make_unique<EmbeddingTransform>("transform.premise", d, rng);
    transform_hypothesis_ = std::make_unique<EmbeddingTransform>("transform.hypothesis", d, rng);
  }
  if (config_.share_encoder) {
    encoder_premise_ = make_encoder("encoder", rng);
  } else {
    encoder_premise_ = make_encoder("encoder.premise", rng);
    encoder_hypothesis_ = make_encoder("encoder.hypothesis", rng);
  }

  OperatorBankConfig bank;
  bank.input_dim = 2 * config_.encoding_dim();
  bank.hidden = config_.op_hidden;
  bank.out = config_.op_out;
  bank.operators = config_.operators;
  bank.norm = config_.bn_placement;
  bank.bn_gamma_init = config_.bn_gamma_init;
  bank.bn_momentum = config_.bn_momentum;
  bank.bn_eps = config_.bn_eps;
  bank_ = std::make_unique<OperatorBank>("bank", bank, rng);
  aggregator_ = std::make_unique<Aggregator>("aggregator", config_.op_out, config_.agg_hidden, rng,
                                             config_.forget_bias_init);
}

NliModel::Encoder NliModel::make_encoder(const std::string& name, Rng& rng) const {
  Encoder enc;
  if (config_.encoder == EncoderKind::kBilstm) {
    enc.fwd = std::make_unique<LstmCellParams>(name + ".fwd", config_.word_dim,
                                               config_.bilstm_hidden, rng, config_.forget_bias_init);
    enc.bwd = std::make_unique<LstmCellParams>(name + ".bwd", config_.word_dim,
                                               config_.bilstm_hidden, rng, config_.forget_bias_init);
  } else {
    enc.tree = std::make_unique<BtreeLstmParams>(name + ".btree", config_.word_dim,
                                                 config_.btree_hidden, rng,
                                                 config_.forget_bias_init,
                                                 config_.btree_internal_input);
  }
  return enc;
}

void NliModel::index_tokens(const Batch& batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (const auto& t : batch.premise_tokens(i)) embeddings_.index(t);
    for (const auto& t : batch.hypothesis_tokens(i)) embeddings_.index(t);
  }
}

Var NliModel::embed(Tape& tape, const Batch& batch, bool premise_side, SequenceLayout& layout) {
  std::vector<std::size_t> ids, lengths;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto tokens = premise_side ? batch.premise_tokens(i) : batch.hypothesis_tokens(i);
    if (tokens.empty()) throw ArgumentError("batch item " + std::to_string(i) + " has an empty sentence");
    lengths.push_back(tokens.size());
    for (const auto& t : tokens) ids.push_back(embeddings_.index(t));
  }
  layout = SequenceLayout::from_lengths(std::move(lengths));
  const std::size_t d = config_.word_dim;
  Tensor words({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) embeddings_.copy_row(ids[r], words.row(r));
  // Frozen rows enter as constants; only the transform is trainable.
  Var x = tape.constant(std::move(words));
  EmbeddingTransform& t =
      premise_side || !transform_hypothesis_ ? *transform_premise_ : *transform_hypothesis_;
  return t.apply(tape, x);
}

EncodedBatch NliModel::encode(Tape& tape, Encoder& enc, Var words, const SequenceLayout& layout,
                              std::size_t steps) {
  if (enc.tree) return btree_encode(tape, *enc.tree, words, layout);
  return encode_bilstm_enhanced(tape, *enc.fwd, *enc.bwd, words, layout, steps);
}

NliModel::Output NliModel::forward(Tape& tape, const Batch& batch, NormMode mode) {
  const std::size_t B = batch.size();
  if (B == 0) throw ArgumentError("empty batch");
  SequenceLayout lp, lh;
  Var wp = embed(tape, batch, true, lp);
  Var wh = embed(tape, batch, false, lh);
  const std::size_t steps =
      config_.trim_padding ? std::max(lp.max_length(), lh.max_length()) : batch.seq_len;

  Output out;
  std::vector<std::size_t> lengths = lp.lengths;
  lengths.insert(lengths.end(), lh.lengths.begin(), lh.lengths.end());
  if (config_.share_encoder) {
    out.encoded = encode(tape, encoder_premise_, concat_rows(std::vector<Var>{wp, wh}),
                         SequenceLayout::from_lengths(lengths), steps);
  } else {
    EncodedBatch ep = encode(tape, encoder_premise_, wp, lp, steps);
    EncodedBatch eh = encode(tape, encoder_hypothesis_, wh, lh, steps);
    std::vector<std::size_t> counts = ep.layout.lengths;
    counts.insert(counts.end(), eh.layout.lengths.begin(), eh.layout.lengths.end());
    out.encoded.kind = ep.kind;
    out.encoded.encodings = concat_rows(std::vector<Var>{ep.encodings, eh.encodings});
    out.encoded.layout = SequenceLayout::from_lengths(std::move(counts));
    out.encoded.source_lengths = lengths;
  }

  std::vector<Var> pair_blocks;
  std::vector<std::size_t> pair_counts;
  for (std::size_t b = 0; b < B; ++b) {
    Var premise = out.encoded.sentence(b);
    Var hypothesis = out.encoded.sentence(B + b);
    out.alignments.push_back(attend(premise, hypothesis, config_.attention));
    pair_blocks.push_back(pair_matrix(out.alignments.back(), hypothesis));
    pair_counts.push_back(hypothesis.rows());
  }
  out.pair_layout = SequenceLayout::from_lengths(std::move(pair_counts));
  Var pairs = B == 1 ? pair_blocks[0] : concat_rows(pair_blocks);

  out.bank = bank_->compose(tape, pairs, mode);
  Var A = aggregator_->aggregate(tape, out.bank.composed, out.pair_layout);
  out.probs = aggregator_->classify(tape, A);
  if (std::all_of(batch.gold.begin(), batch.gold.end(), [](int g) { return g >= 0; })) {
    out.loss = nll_loss(out.probs, batch.gold);
  }
  return out;
}

std::vector<Parameter*> NliModel::parameters() {
  std::vector<Parameter*> out = transform_premise_->parameters();
  if (transform_hypothesis_) append(out, transform_hypothesis_->parameters());
  append(out, encoder_premise_.parameters());
  append(out, encoder_hypothesis_.parameters());
  append(out, bank_->parameters());
  append(out, aggregator_->parameters());
  return out;
}

std::vector<BatchNorm*> NliModel::norms() { return bank_->norms(); }

std::size_t NliModel::parameter_count() { return count(parameters()); }

std::vector<NliModel::CountLine> NliModel::parameter_breakdown() {
  std::vector<Parameter*> transform = transform_premise_->parameters();
  if (transform_hypothesis_) append(transform, transform_hypothesis_->parameters());
  std::vector<Parameter*> encoder = encoder_premise_.parameters();
  append(encoder, encoder_hypothesis_.parameters());
  std::vector<Parameter*> gate{&bank_->gate_weight(), &bank_->gate_bias()};
  return {
      {"embedding transform", count(transform)},
      {std::string(encoder_name(config_.encoder)) + " encoder", count(encoder)},
      {"operator networks", count(bank_->parameters()) - count(gate)},
      {"operator gate", count(gate)},
      {"aggregation lstm", count(aggregator_->cell().parameters())},
      {"classifier", aggregator_->weight().size() + aggregator_->bias().size()},
  };
}

}  // namespace compnli
