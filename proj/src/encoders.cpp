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

#include "compnli/encoders.hpp"

#include <algorithm>
#include <numeric>

#include "compnli/init.hpp"
#include "compnli/ops.hpp"
#include "compnli/rng.hpp"

namespace compnli {
namespace {

constexpr const char* kGateNames[4] = {"input", "forget", "output", "candidate"};

void require_rows(Var x, std::size_t cols, const char* what) {
  if (x.value().rank() != 2 || x.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected [n x " + std::to_string(cols) +
                         "], got " + shape_string(x.shape()));
  }
}

// Gate pre-activations x W_g + b_g for the four gates.
std::array<Var, 4> project_inputs(Tape& tape, LstmCellParams& p, Var x) {
  std::array<Var, 4> out;
  for (std::size_t g = 0; g < 4; ++g) {
    out[g] = add_bias(matmul(x, tape.param(p.W[g])), tape.param(p.b[g]));
  }
  return out;
}

LstmState step_projected(Tape& tape, LstmCellParams& p, const std::array<Var, 4>& xw, Var h_prev,
                         Var c_prev) {
  std::array<Var, 4> z;
  for (std::size_t g = 0; g < 4; ++g) z[g] = add(xw[g], matmul(h_prev, tape.param(p.U[g])));
  Var i = sigmoid(z[kInputGate]);
  Var f = sigmoid(z[kForgetGate]);
  Var o = sigmoid(z[kOutputGate]);
  Var cand = tanh(z[kCandidate]);
  Var c = add(mul(f, c_prev), mul(i, cand));
  return {mul(o, tanh(c)), c};
}

Var zeros(Tape& tape, std::size_t rows, std::size_t cols) {
  return tape.constant(Tensor({rows, cols}));
}

// Rounds of the pairing schedule; round r holds the child pairs of the
// internal nodes created at that level.
std::vector<std::vector<std::array<std::size_t, 2>>> schedule_rounds(std::size_t n) {
  std::vector<std::vector<std::array<std::size_t, 2>>> rounds;
  std::vector<std::size_t> level(n);
  std::iota(level.begin(), level.end(), 0);
  std::size_t next = n;
  while (level.size() > 1) {
    auto& round = rounds.emplace_back();
    std::vector<std::size_t> up;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      if (i + 1 < level.size()) {
        round.push_back({level[i], level[i + 1]});
        up.push_back(next++);
      } else {
        up.push_back(level[i]);  // promoted as is
      }
    }
    level = std::move(up);
  }
  return rounds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Chain LSTM

LstmCellParams::LstmCellParams(const std::string& name, std::size_t input_dim_,
                               std::size_t hidden_, Rng& rng, double forget_bias)
    : input_dim(input_dim_), hidden(hidden_) {
  if (input_dim == 0 || hidden == 0) throw ArgumentError("LSTM dimensions must be positive");
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string prefix = name + "." + kGateNames[g];
    W[g] = Parameter(prefix + ".W", xavier_uniform(input_dim, hidden, rng));
    U[g] = Parameter(prefix + ".U", xavier_uniform(hidden, hidden, rng));
    b[g] = Parameter(prefix + ".b", Tensor({hidden}, g == kForgetGate ? forget_bias : 0.0));
  }
}

std::vector<Parameter*> LstmCellParams::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t g = 0; g < 4; ++g) {
    out.push_back(&W[g]);
    out.push_back(&U[g]);
    out.push_back(&b[g]);
  }
  return out;
}

LstmState lstm_step(Tape& tape, LstmCellParams& p, Var x, Var h_prev, Var c_prev) {
  require_rows(x, p.input_dim, "lstm_step input");
  require_rows(h_prev, p.hidden, "lstm_step h_prev");
  require_rows(c_prev, p.hidden, "lstm_step c_prev");
  if (h_prev.rows() != x.rows() || c_prev.rows() != x.rows()) {
    throw DimensionError("lstm_step: batch sizes differ: " + shape_string(x.shape()) + ", " +
                         shape_string(h_prev.shape()) + ", " + shape_string(c_prev.shape()));
  }
  return step_projected(tape, p, project_inputs(tape, p, x), h_prev, c_prev);
}

SequenceLayout SequenceLayout::from_lengths(std::vector<std::size_t> lengths) {
  SequenceLayout layout;
  layout.lengths = std::move(lengths);
  std::size_t at = 0;
  for (std::size_t len : layout.lengths) {
    layout.offsets.push_back(at);
    at += len;
  }
  return layout;
}

std::size_t SequenceLayout::total() const {
  return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
}

std::size_t SequenceLayout::max_length() const {
  return lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end());
}

SequenceRun run_lstm(Tape& tape, LstmCellParams& p, Var inputs, const SequenceLayout& layout,
                     std::size_t steps, bool reverse) {
  require_rows(inputs, p.input_dim, "run_lstm");
  const std::size_t S = layout.count();
  if (S == 0) throw ArgumentError("run_lstm: no sequences");
  for (std::size_t len : layout.lengths) {
    if (len == 0) throw ArgumentError("run_lstm: empty sequence");
  }
  if (inputs.rows() != layout.total()) {
    throw DimensionError("run_lstm: layout covers " + std::to_string(layout.total()) +
                         " rows but inputs are " + shape_string(inputs.shape()));
  }
  if (steps < layout.max_length()) throw ArgumentError("run_lstm: steps shorter than a sequence");

  const std::array<Var, 4> xw_all = project_inputs(tape, p, inputs);
  Var h = zeros(tape, S, p.hidden);
  Var c = h;
  std::vector<Var> hs;
  hs.reserve(steps);
  std::vector<std::ptrdiff_t> idx(S);
  std::vector<std::uint8_t> live(S);

  for (std::size_t t = 0; t < steps; ++t) {
    bool any = false;
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t len = layout.lengths[s];
      // Reverse runs start at each sequence's own last token, so padding
      // never reaches a real state.
      const bool in = t < len;
      const std::size_t pos = reverse ? len - 1 - t : t;
      live[s] = in;
      idx[s] = in ? static_cast<std::ptrdiff_t>(layout.offsets[s] + pos) : -1;
      any = any || in;
    }
    if (!any) {
      hs.push_back(h);
      continue;
    }
    std::array<Var, 4> xw;
    for (std::size_t g = 0; g < 4; ++g) xw[g] = gather_rows(xw_all[g], idx);
    LstmState next = step_projected(tape, p, xw, h, c);
    h = select_rows(live, next.h, h);
    c = select_rows(live, next.c, c);
    hs.push_back(h);
  }

  // Position pos of sequence s was consumed at step pos (or len-1-pos).
  std::vector<std::ptrdiff_t> out_idx(layout.total());
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t len = layout.lengths[s];
    for (std::size_t pos = 0; pos < len; ++pos) {
      const std::size_t t = reverse ? len - 1 - pos : pos;
      out_idx[layout.offsets[s] + pos] = static_cast<std::ptrdiff_t>(t * S + s);
    }
  }
  Var all = hs.size() == 1 ? hs[0] : concat_rows(hs);
  return {gather_rows(all, out_idx), h};
}

// ---------------------------------------------------------------------------
// Bi-LSTM

Var EncodedBatch::sentence(std::size_t s) const {
  std::vector<std::ptrdiff_t> idx(layout.lengths.at(s));
  std::iota(idx.begin(), idx.end(), static_cast<std::ptrdiff_t>(layout.offsets[s]));
  return gather_rows(encodings, idx);
}

Var bilstm_encode(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd, Var words,
                  const SequenceLayout& layout, std::size_t steps) {
  if (fwd.input_dim != bwd.input_dim || fwd.hidden != bwd.hidden) {
    throw DimensionError("bilstm: forward and backward cells differ in shape");
  }
  Var f = run_lstm(tape, fwd, words, layout, steps, false).outputs;
  Var b = run_lstm(tape, bwd, words, layout, steps, true).outputs;
  return concat({f, b});
}

Var bilstm_encode(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd, Var words) {
  if (words.value().rank() != 2) {
    throw DimensionError("bilstm: expected [n x d], got " + shape_string(words.shape()));
  }
  const auto layout = SequenceLayout::from_lengths({words.rows()});
  return bilstm_encode(tape, fwd, bwd, words, layout, words.rows());
}

Var enhance(Var words, Var states) {
  if (words.value().rank() != 2 || states.value().rank() != 2 || words.rows() != states.rows()) {
    throw DimensionError("enhance: word and state counts differ: " + shape_string(words.shape()) +
                         " and " + shape_string(states.shape()));
  }
  return concat({words, states});
}

EncodedBatch encode_bilstm_enhanced(Tape& tape, LstmCellParams& fwd, LstmCellParams& bwd,
                                    Var words, const SequenceLayout& layout, std::size_t steps) {
  EncodedBatch out;
  out.kind = EncoderKind::kBilstm;
  out.encodings = enhance(words, bilstm_encode(tape, fwd, bwd, words, layout, steps));
  out.layout = layout;
  out.source_lengths = layout.lengths;
  return out;
}

// ---------------------------------------------------------------------------
// Binary-tree LSTM

BtreeLstmParams::BtreeLstmParams(const std::string& name, std::size_t input_dim_,
                                 std::size_t hidden_, Rng& rng, double forget_bias,
                                 InternalInput internal_input_)
    : input_dim(input_dim_), hidden(hidden_), internal_input(internal_input_) {
  if (input_dim == 0 || hidden == 0) throw ArgumentError("btree dimensions must be positive");
  static constexpr const char* kGate[3] = {"input", "output", "candidate"};
  static constexpr const char* kChild[2] = {"left", "right"};
  for (std::size_t g = 0; g < 3; ++g) {
    const std::string prefix = name + "." + kGate[g];
    W[g] = Parameter(prefix + ".W", xavier_uniform(input_dim, hidden, rng));
    for (std::size_t k = 0; k < 2; ++k) {
      U[g][k] = Parameter(prefix + ".U_" + kChild[k], xavier_uniform(hidden, hidden, rng));
    }
    b[g] = Parameter(prefix + ".b", Tensor({hidden}));
  }
  if (has_forget_input()) {
    W_forget = Parameter(name + ".forget.W", xavier_uniform(input_dim, hidden, rng));
  }
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < 2; ++l) {
      U_forget[k][l] = Parameter(name + ".forget_" + kChild[k] + ".U_" + kChild[l],
                                 xavier_uniform(hidden, hidden, rng));
    }
    b_forget[k] = Parameter(name + ".forget_" + kChild[k] + ".b", Tensor({hidden}, forget_bias));
  }
}

std::vector<Parameter*> BtreeLstmParams::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t g = 0; g < 3; ++g) {
    out.push_back(&W[g]);
    out.push_back(&U[g][kLeft]);
    out.push_back(&U[g][kRight]);
    out.push_back(&b[g]);
  }
  if (has_forget_input()) out.push_back(&W_forget);
  for (std::size_t k = 0; k < 2; ++k) {
    out.push_back(&U_forget[k][kLeft]);
    out.push_back(&U_forget[k][kRight]);
    out.push_back(&b_forget[k]);
  }
  return out;
}

std::vector<std::array<std::size_t, 2>> btree_schedule(std::size_t n) {
  if (n == 0) throw ArgumentError("btree: empty sentence");
  std::vector<std::array<std::size_t, 2>> flat;
  for (const auto& round : schedule_rounds(n)) flat.insert(flat.end(), round.begin(), round.end());
  return flat;
}

EncodedBatch btree_encode(Tape& tape, BtreeLstmParams& p, Var words,
                          const SequenceLayout& layout) {
  require_rows(words, p.input_dim, "btree_encode");
  const std::size_t S = layout.count();
  if (S == 0) throw ArgumentError("btree_encode: no sentences");
  for (std::size_t len : layout.lengths) {
    if (len == 0) throw ArgumentError("btree_encode: empty sentence");
  }
  if (words.rows() != layout.total()) {
    throw DimensionError("btree_encode: layout covers " + std::to_string(layout.total()) +
                         " rows but words are " + shape_string(words.shape()));
  }
  const bool span_mean = p.has_forget_input();

  // Leaves: no children, so only the input, output and candidate gates act.
  std::array<Var, 3> z;
  for (std::size_t g = 0; g < 3; ++g) {
    z[g] = add_bias(matmul(words, tape.param(p.W[g])), tape.param(p.b[g]));
  }
  Var leaf_c = mul(sigmoid(z[BtreeLstmParams::kIn]), tanh(z[BtreeLstmParams::kCand]));
  Var leaf_h = mul(sigmoid(z[BtreeLstmParams::kOut]), tanh(leaf_c));

  // Nodes of all sentences live in one global row space: first every leaf in
  // input order, then each round's new nodes appended as one block.
  std::vector<Var> h_blocks{leaf_h}, c_blocks{leaf_c}, x_blocks{words};
  std::size_t global_rows = words.rows();
  std::vector<double> span(global_rows, 1.0);

  std::vector<std::vector<std::vector<std::array<std::size_t, 2>>>> rounds(S);
  std::vector<std::vector<std::size_t>> local_to_global(S);
  std::size_t max_rounds = 0;
  for (std::size_t s = 0; s < S; ++s) {
    rounds[s] = schedule_rounds(layout.lengths[s]);
    max_rounds = std::max(max_rounds, rounds[s].size());
    for (std::size_t i = 0; i < layout.lengths[s]; ++i) {
      local_to_global[s].push_back(layout.offsets[s] + i);
    }
  }

  auto stacked = [](const std::vector<Var>& blocks) {
    return blocks.size() == 1 ? blocks[0] : concat_rows(blocks);
  };

  for (std::size_t r = 0; r < max_rounds; ++r) {
    std::vector<std::ptrdiff_t> left, right;
    for (std::size_t s = 0; s < S; ++s) {
      if (r >= rounds[s].size()) continue;
      for (const auto& pair : rounds[s][r]) {
        left.push_back(static_cast<std::ptrdiff_t>(local_to_global[s][pair[0]]));
        right.push_back(static_cast<std::ptrdiff_t>(local_to_global[s][pair[1]]));
        local_to_global[s].push_back(global_rows + left.size() - 1);
      }
    }
    const Var H = stacked(h_blocks), C = stacked(c_blocks);
    const Var hl = gather_rows(H, left), hr = gather_rows(H, right);
    const Var cl = gather_rows(C, left), cr = gather_rows(C, right);

    Var x;
    if (span_mean) {
      std::vector<double> wl(left.size()), wr(left.size());
      for (std::size_t j = 0; j < left.size(); ++j) {
        const double nl = span[left[j]], nr = span[right[j]];
        wl[j] = nl / (nl + nr);
        wr[j] = nr / (nl + nr);
        span.push_back(nl + nr);
      }
      const Var X = stacked(x_blocks);
      x = add(scale_rows(gather_rows(X, left), wl), scale_rows(gather_rows(X, right), wr));
      x_blocks.push_back(x);
    }

    auto preact = [&](Parameter* w, Parameter& ul, Parameter& ur, Parameter& bias) {
      Var sum_h = add(matmul(hl, tape.param(ul)), matmul(hr, tape.param(ur)));
      if (span_mean) sum_h = add(matmul(x, tape.param(*w)), sum_h);
      return add_bias(sum_h, tape.param(bias));
    };
    using B = BtreeLstmParams;
    Var i = sigmoid(preact(&p.W[B::kIn], p.U[B::kIn][B::kLeft], p.U[B::kIn][B::kRight], p.b[B::kIn]));
    Var o = sigmoid(
        preact(&p.W[B::kOut], p.U[B::kOut][B::kLeft], p.U[B::kOut][B::kRight], p.b[B::kOut]));
    Var cand = tanh(
        preact(&p.W[B::kCand], p.U[B::kCand][B::kLeft], p.U[B::kCand][B::kRight], p.b[B::kCand]));
    Var fl = sigmoid(preact(&p.W_forget, p.U_forget[B::kLeft][B::kLeft],
                            p.U_forget[B::kLeft][B::kRight], p.b_forget[B::kLeft]));
    Var fr = sigmoid(preact(&p.W_forget, p.U_forget[B::kRight][B::kLeft],
                            p.U_forget[B::kRight][B::kRight], p.b_forget[B::kRight]));

    Var c = add(add(mul(fl, cl), mul(fr, cr)), mul(i, cand));
    h_blocks.push_back(mul(o, tanh(c)));
    c_blocks.push_back(c);
    global_rows += left.size();
  }

  // Emit leaves then internal nodes; promoted nodes are not repeated because
  // local ids only grow when a pair is formed.
  std::vector<std::ptrdiff_t> order;
  std::vector<std::size_t> counts;
  for (std::size_t s = 0; s < S; ++s) {
    counts.push_back(local_to_global[s].size());
    for (std::size_t g : local_to_global[s]) order.push_back(static_cast<std::ptrdiff_t>(g));
  }

  EncodedBatch out;
  out.kind = EncoderKind::kBtree;
  out.encodings = gather_rows(stacked(h_blocks), order);
  out.layout = SequenceLayout::from_lengths(std::move(counts));
  out.source_lengths = layout.lengths;
  return out;
}

}  // namespace compnli
