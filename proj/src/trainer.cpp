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

#include "compnli/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "compnli/rng.hpp"

namespace compnli {
namespace {

bool uses_batch_norm(const NliModel& model) {
  return model.config().bn_placement != NormPlacement::kNone;
}

struct Snapshot {
  std::vector<Tensor> params;
  std::vector<Tensor> means, vars;

  static Snapshot take(NliModel& model) {
    Snapshot s;
    for (Parameter* p : model.parameters()) s.params.push_back(p->value);
    for (BatchNorm* bn : model.norms()) {
      s.means.push_back(bn->running_mean);
      s.vars.push_back(bn->running_var);
    }
    return s;
  }
  void restore(NliModel& model) const {
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = this->params[i];
    auto norms = model.norms();
    for (std::size_t i = 0; i < norms.size(); ++i) {
      norms[i]->running_mean = means[i];
      norms[i]->running_var = vars[i];
    }
  }
};

}  // namespace

double Metrics::class_accuracy(std::size_t c) const {
  return count.at(c) == 0 ? 0.0 : static_cast<double>(correct[c]) / static_cast<double>(count[c]);
}

void accumulate(Metrics& m, const Tensor& probs, const std::vector<int>& gold) {
  for (std::size_t r = 0; r < gold.size(); ++r) {
    const int g = gold[r];
    if (g < 0 || g >= static_cast<int>(kNumLabels)) throw ArgumentError("example without a gold label");
    const LabelDistribution d = distribution_row(probs, r);
    m.loss += -std::log(std::max(d.probs[g], 1e-12));
    ++m.count[g];
    if (d.argmax() == g) ++m.correct[g];
    ++m.examples;
  }
}

void finalize(Metrics& m) {
  if (m.examples == 0) return;
  std::size_t right = 0;
  for (std::size_t c : m.correct) right += c;
  m.loss /= static_cast<double>(m.examples);
  m.accuracy = static_cast<double>(right) / static_cast<double>(m.examples);
}

Metrics train_epoch(NliModel& model, Adam& optimizer, const std::vector<SentencePair>& pairs,
                    std::uint64_t shuffle_seed) {
  const ModelConfig& c = model.config();
  Metrics m;
  for (const Batch& batch : make_batches(pairs, c.batch_size, c.seq_len, shuffle_seed)) {
    if (batch.size() < 2 && uses_batch_norm(model)) {
      m.skipped += batch.size();
      continue;
    }
    Tape tape;
    NliModel::Output out = model.forward(tape, batch, NormMode::kTrain);
    if (!out.loss) throw ArgumentError("training example without a gold label");
    optimizer.zero_grad();
    tape.backward(*out.loss);
    optimizer.step();
    accumulate(m, out.probs.value(), batch.gold);
  }
  finalize(m);
  return m;
}

Metrics evaluate(NliModel& model, const std::vector<SentencePair>& pairs) {
  const ModelConfig& c = model.config();
  Metrics m;
  for (const Batch& batch : make_batches(pairs, c.batch_size, c.seq_len, std::nullopt)) {
    Tape tape;
    accumulate(m, model.forward(tape, batch, NormMode::kEval).probs.value(), batch.gold);
  }
  finalize(m);
  return m;
}

std::vector<LabelDistribution> predict(NliModel& model, const std::vector<SentencePair>& pairs) {
  const ModelConfig& c = model.config();
  std::vector<LabelDistribution> out;
  for (const Batch& batch : make_batches(pairs, c.batch_size, c.seq_len, std::nullopt)) {
    Tape tape;
    const Tensor probs = model.forward(tape, batch, NormMode::kEval).probs.value();
    for (std::size_t r = 0; r < batch.size(); ++r) out.push_back(distribution_row(probs, r));
  }
  return out;
}

std::string format_epoch_line(std::size_t epoch, const Metrics& train, const Metrics& dev) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.4f\t%.6f\t%.4f\t%.4f\t%.4f\t%.4f", epoch, train.loss,
                train.accuracy, dev.loss, dev.accuracy, dev.class_accuracy(0),
                dev.class_accuracy(1), dev.class_accuracy(2));
  return buf;
}

FitResult fit(NliModel& model, Adam& optimizer, const std::vector<SentencePair>& train,
              const std::vector<SentencePair>& dev, const FitOptions& options) {
  FitResult result;
  Snapshot best = Snapshot::take(model);
  double best_accuracy = -1.0;
  std::size_t stale = 0;
  if (options.log) *options.log << "epoch\ttrain_loss\ttrain_acc\tdev_loss\tdev_acc\tdev_acc_"
                                << kLabelNames[0] << "\tdev_acc_" << kLabelNames[1] << "\tdev_acc_"
                                << kLabelNames[2] << '\n';
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    const std::uint64_t seed = model.config().seed * 0x9e3779b97f4a7c15ULL + epoch;
    Metrics tm = train_epoch(model, optimizer, train, seed);
    Metrics dm = evaluate(model, dev);
    result.train_history.push_back(tm);
    result.dev_history.push_back(dm);
    result.epochs_run = epoch;
    if (options.log) *options.log << format_epoch_line(epoch, tm, dm) << std::endl;

    const bool improved = dm.accuracy > best_accuracy;
    if (improved) {
      best_accuracy = dm.accuracy;
      result.best_epoch = epoch;
      result.best_dev = dm;
      best = Snapshot::take(model);
      stale = 0;
    } else {
      ++stale;
    }
    if (options.on_epoch) options.on_epoch(epoch, improved);
    if (stale >= options.patience) break;
  }
  best.restore(model);
  return result;
}

}  // namespace compnli
