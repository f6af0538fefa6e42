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
#include <span>
#include <string>
#include <vector>

#include "compnli/autodiff.hpp"

namespace compnli {

class Rng;

// Gate order used for every per-gate array below.
enum LstmGate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };

/// Chain LSTM cell. Matrices are stored [in × out] so that a batch of row
/// vectors is multiplied on the right.
struct LstmCellParams {
  LstmCellParams(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng,
                 double forget_bias = 1.0);

  std::vector<Parameter*> parameters();

  std::size_t input_dim;
  std::size_t hidden;
  std::array<Parameter, 4> W;  // input_dim × hidden
  std::array<Parameter, 4> U;  // hidden × hidden
  std::array<Parameter, 4> b;  // hidden
};

struct LstmState {
  Var h;
  Var c;
};

/// One step for a batch of rows: x [B × input_dim], h_prev and c_prev
/// [B × hidden].
LstmState lstm_step(Tape& tape, LstmCellParams& p, Var x, Var h_prev, Var c_prev);

/// Rows of several sequences stored back to back. Sequence s occupies rows
/// [offsets[s], offsets[s] + lengths[s]).
struct SequenceLayout {
  static SequenceLayout from_lengths(std::vector<std::size_t> lengths);

  std::size_t total() const;
  std::size_t max_length() const;
  std::size_t count() const { return lengths.size(); }

  std::vector<std::size_t> offsets;
  std::vector<std::size_t> lengths;
};

struct SequenceRun {
  Var outputs;  // hidden state at every real position, in input row order
  Var final_h;  // [sequences × hidden], state after each sequence's last real step
};

/// Runs the cell over all sequences at once for `steps` time steps (at least
/// the longest length). Positions past a sequence's end are masked: the
/// state is carried through unchanged, so the result for a sequence does not
/// depend on `steps` or on its batch mates. With `reverse` each sequence is
/// consumed from its last real token to its first.
SequenceRun run_lstm(Tape& tape, LstmCellParams& p, Var inputs, const SequenceLayout& layout,
                     std::size_t steps, bool reverse);

enum class EncoderKind { kBilstm, kBtree };

/// Encodings of a batch of sentences, stacked row-wise. Sentence s owns rows
/// [offsets[s], offsets[s] + counts[s]).
struct EncodedBatch {
  EncoderKind kind = EncoderKind::kBilstm;
  Var encodings;
  SequenceLayout layout;                    // over encodings
  std::vector<std::size_t> source_lengths;  // tokens per sentence

  /// Rows of sentence s as their own tensor.
  Var sentence(std::size_t s) const;
};

/// Forward and backward states concatenated: [n × 2·hidden] for a single
/// sentence given as [n × input_dim].
Var bilstm_encode(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd, Var words);

/// Batched form over stacked sentences.
Var bilstm_encode(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd, Var words,
                  const SequenceLayout& layout, std::size_t steps);

/// [words ; states] per row.
Var enhance(Var words, Var states);

/// Bi-LSTM encoder with word enhancement over stacked sentences.
EncodedBatch encode_bilstm_enhanced(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd,
                                    Var words, const SequenceLayout& layout, std::size_t steps);

/// What an internal tree node sees as its input x. Internal nodes have no
/// word of their own.
enum class InternalInput {
  kZero,      // x = 0, only recurrences and biases act
  kSpanMean,  // x = mean of the word vectors under the node
};

/// Binary-tree LSTM parameters. Gate arrays W, U and b use the order
/// {input, output, candidate}; forget gates are kept separately because each
/// of the two children has its own.
///
/// W_forget is only allocated when internal nodes receive an input. Leaves
/// have no children to forget and, with x = 0, internal nodes never touch it.
struct BtreeLstmParams {
  enum Gate : std::size_t { kIn = 0, kOut = 1, kCand = 2 };
  enum Child : std::size_t { kLeft = 0, kRight = 1 };

  BtreeLstmParams(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng,
                  double forget_bias = 1.0, InternalInput internal_input = InternalInput::kZero);

  std::vector<Parameter*> parameters();
  bool has_forget_input() const { return internal_input == InternalInput::kSpanMean; }

  std::size_t input_dim;
  std::size_t hidden;
  InternalInput internal_input;
  std::array<Parameter, 3> W;                        // input_dim × hidden
  Parameter W_forget;                                // input_dim × hidden, see above
  std::array<std::array<Parameter, 2>, 3> U;         // [gate][child], hidden × hidden
  std::array<std::array<Parameter, 2>, 2> U_forget;  // [gated child][source child]
  std::array<Parameter, 3> b;
  std::array<Parameter, 2> b_forget;
};

/// Complete binary tree over each sentence: adjacent nodes are paired level
/// by level and an odd trailing node moves up unchanged. Each sentence of n
/// tokens yields 2n-1 encodings: the leaves left to right, then the internal
/// nodes level by level, left to right.
EncodedBatch btree_encode(Tape& tape, BtreeLstmParams& p, Var words, const SequenceLayout& layout);

/// Pairing schedule of a tree over n leaves: for every internal node, the
/// node ids of its children. Leaves are ids 0..n-1 and internal nodes follow
/// in creation order.
std::vector<std::array<std::size_t, 2>> btree_schedule(std::size_t n);

}  // namespace compnli
