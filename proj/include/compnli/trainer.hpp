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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "compnli/data.hpp"
#include "compnli/model.hpp"
#include "compnli/optimizer.hpp"

namespace compnli {

struct Metrics {
  double loss = 0.0;      // mean cross entropy over examples
  double accuracy = 0.0;  // over examples
  std::size_t examples = 0;
  std::size_t skipped = 0;  // training examples left out (single-item batches under batch norm)
  std::array<std::size_t, 3> count{};    // examples per gold label
  std::array<std::size_t, 3> correct{};  // correct predictions per gold label

  /// Accuracy restricted to gold label c; 0 when the class is absent.
  double class_accuracy(std::size_t c) const;
};

/// Folds predictions into metrics. probs is [n × 3] and gold has n labels.
void accumulate(Metrics& m, const Tensor& probs, const std::vector<int>& gold);
/// Turns the running sums of accumulate() into means.
void finalize(Metrics& m);

/// One pass over `pairs` in a shuffled order with an optimizer step per
/// batch. With batch norm enabled a batch of a single item cannot be
/// normalised and is skipped (reported in Metrics::skipped).
Metrics train_epoch(NliModel& model, Adam& optimizer, const std::vector<SentencePair>& pairs,
                    std::uint64_t shuffle_seed);

/// Loss and accuracy with running batch-norm statistics. Every pair needs a
/// gold label.
Metrics evaluate(NliModel& model, const std::vector<SentencePair>& pairs);

/// Label distributions in input order; gold labels are ignored.
std::vector<LabelDistribution> predict(NliModel& model, const std::vector<SentencePair>& pairs);

/// epoch, train loss, train accuracy, dev loss, dev accuracy, then dev
/// accuracy per class in label order. Tab separated.
std::string format_epoch_line(std::size_t epoch, const Metrics& train, const Metrics& dev);

struct FitOptions {
  std::size_t max_epochs = 20;
  std::size_t patience = 3;  // epochs without dev improvement before stopping
  std::ostream* log = nullptr;
  // Called after each epoch with whether dev accuracy improved.
  std::function<void(std::size_t epoch, bool improved)> on_epoch;
};

struct FitResult {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based
  Metrics best_dev;
  std::vector<Metrics> train_history;
  std::vector<Metrics> dev_history;
};

/// Trains until dev accuracy has not improved for `patience` epochs or
/// `max_epochs` is reached, then restores the parameters and batch-norm
/// statistics of the best epoch.
FitResult fit(NliModel& model, Adam& optimizer, const std::vector<SentencePair>& train,
              const std::vector<SentencePair>& dev, const FitOptions& options);

}  // namespace compnli
