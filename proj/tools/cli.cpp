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

#include "cli.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "compnli/checkpoint.hpp"
#include "compnli/trainer.hpp"

namespace compnli {
namespace {

// Thrown for bad input data; maps to kExitData.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

struct TrainArgs {
  std::string train, dev, embeddings, encoder, config, checkpoint_out;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  ModelConfig config;
  if (!a.config.empty()) config = ModelConfig::from_file(a.config);
  config.set("encoder", a.encoder);

  SnliReport train_report, dev_report;
  const auto train = load_snli(a.train, &train_report);
  const auto dev = load_snli(a.dev, &dev_report);
  if (train.empty()) throw DataError("no labelled pairs in " + a.train);
  if (dev.empty()) throw DataError("no labelled pairs in " + a.dev);
  err << "train: " << train.size() << " pairs, " << train_report.skipped_no_label
      << " without label\n"
      << "dev: " << dev.size() << " pairs, " << dev_report.skipped_no_label << " without label\n";

  std::unordered_set<std::string> vocab;
  for (const auto* set : {&train, &dev}) {
    for (const auto& p : *set) {
      vocab.insert(p.premise.begin(), p.premise.end());
      vocab.insert(p.hypothesis.begin(), p.hypothesis.end());
    }
  }
  EmbeddingTable table = make_embedding_table(config);
  const EmbeddingLoadReport emb = load_embeddings(a.embeddings, table, &vocab);
  err << "embeddings: " << emb.rows << " rows for " << vocab.size() << " corpus tokens, "
      << emb.skipped << " lines skipped\n";
  for (const auto& w : emb.warnings) err << "warning: " << w << '\n';

  NliModel model(config, std::move(table));
  err << "parameters: " << model.parameter_count() << '\n';
  auto optimizer = make_optimizer(model);
  FitOptions options;
  options.max_epochs = config.max_epochs;
  options.patience = config.patience;
  options.log = &out;
  const FitResult result = fit(model, *optimizer, train, dev, options);
  err << "best epoch " << result.best_epoch << ", dev accuracy "
      << fixed(result.best_dev.accuracy, 4) << '\n';
  if (!a.checkpoint_out.empty()) {
    save_checkpoint(a.checkpoint_out, model, optimizer.get());
    err << "checkpoint written to " << a.checkpoint_out << '\n';
  }
  return kExitOk;
}

int run_eval(const std::string& checkpoint, const std::string& data, std::ostream& out) {
  auto loaded = load_checkpoint(checkpoint);
  const auto pairs = load_snli(data);
  if (pairs.empty()) throw DataError("no labelled pairs in " + data);
  const Metrics m = evaluate(*loaded.model, pairs);
  out << "examples=" << m.examples << "\tloss=" << fixed(m.loss, 6)
      << "\taccuracy=" << fixed(m.accuracy, 4);
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    out << '\t' << kLabelNames[c] << '=' << fixed(m.class_accuracy(c), 4);
  }
  out << '\n';
  return kExitOk;
}

int run_infer(const std::string& checkpoint, std::istream& in, std::ostream& out) {
  auto loaded = load_checkpoint(checkpoint);
  std::vector<SentencePair> pairs;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError("stdin:" + std::to_string(n) + ": expected premise<TAB>hypothesis");
    }
    try {
      pairs.push_back(make_pair(line.substr(0, tab), line.substr(tab + 1)));
    } catch (const ArgumentError& e) {
      throw DataError("stdin:" + std::to_string(n) + ": " + e.what());
    }
  }
  if (pairs.empty()) return kExitOk;
  for (const LabelDistribution& d : predict(*loaded.model, pairs)) {
    out << kLabelNames[d.argmax()];
    for (double p : d.probs) out << '\t' << fixed(p, 6);
    out << '\n';
  }
  return kExitOk;
}

int run_align(const std::string& checkpoint, const std::string& premise,
              const std::string& hypothesis, std::ostream& out) {
  auto loaded = load_checkpoint(checkpoint);
  NliModel& model = *loaded.model;
  SentencePair pair;
  try {
    pair = make_pair(premise, hypothesis);
  } catch (const ArgumentError& e) {
    throw DataError(e.what());
  }
  const Batch batch = make_batches({pair}, 1, model.config().seq_len, std::nullopt).at(0);
  Tape tape;
  const auto result = model.forward(tape, batch, NormMode::kEval);
  out << "# premise: " << join(batch.premise_tokens(0))
      << "\thypothesis: " << join(batch.hypothesis_tokens(0)) << '\n';
  // Tree encoders align phrases: rows and columns then also cover internal nodes.
  const Tensor& w = result.alignments.at(0).weights.value();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) out << (c ? " " : "") << fixed(w.at(r, c), 6);
    out << '\n';
  }
  out << "# gates\n";
  const Tensor& g = result.bank.gates.value();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) out << (c ? " " : "") << fixed(g.at(r, c), 6);
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Natural language inference with composable operator networks", "compnli"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and report per-epoch metrics");
  train_cmd->add_option("--train", train.train, "Training pairs (jsonl)")->required();
  train_cmd->add_option("--dev", train.dev, "Development pairs (jsonl)")->required();
  train_cmd->add_option("--embeddings", train.embeddings, "Word vectors (text format)")->required();
  train_cmd->add_option("--encoder", train.encoder, "Sentence encoder")
      ->required()
      ->check(CLI::IsMember({"bilstm", "btree"}));
  train_cmd->add_option("--config", train.config, "key=value settings file");
  train_cmd->add_option("--checkpoint-out", train.checkpoint_out, "Where to write the model");

  std::string checkpoint, data, premise, hypothesis;
  auto* eval_cmd = app.add_subcommand("eval", "Loss and accuracy on labelled pairs");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--data", data, "Labelled pairs (jsonl)")->required();

  auto* infer_cmd = app.add_subcommand("infer", "Label premise<TAB>hypothesis lines from stdin");
  infer_cmd->add_option("--checkpoint", checkpoint)->required();

  auto* align_cmd = app.add_subcommand("align", "Attention weights and gates for one pair");
  align_cmd->add_option("--checkpoint", checkpoint)->required();
  align_cmd->add_option("--premise", premise)->required();
  align_cmd->add_option("--hypothesis", hypothesis)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train, out, err);
    if (*eval_cmd) return run_eval(checkpoint, data, out);
    if (*infer_cmd) return run_infer(checkpoint, in, out);
    return run_align(checkpoint, premise, hypothesis, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
  } catch (const VersionError& e) {
    err << "version error: " << e.what() << '\n';
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
  }
  return kExitData;
}

}  // namespace compnli
