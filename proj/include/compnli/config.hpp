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
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "compnli/attention.hpp"
#include "compnli/composition.hpp"
#include "compnli/encoders.hpp"

namespace compnli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every model, data and training setting. Serialised as flat "key=value"
/// lines; the same text is stored in checkpoints.
struct ModelConfig {
  EncoderKind encoder = EncoderKind::kBtree;

  std::size_t word_dim = 300;
  std::size_t seq_len = 64;
  std::size_t bilstm_hidden = 300;  // per direction
  std::size_t btree_hidden = 300;
  std::size_t operators = 11;
  std::size_t op_hidden = 300;
  std::size_t op_out = 300;
  std::size_t agg_hidden = 300;
  std::size_t batch_size = 40;

  AttentionMode attention = AttentionMode::kSoftmax;
  InternalInput btree_internal_input = InternalInput::kZero;
  NormPlacement bn_placement = NormPlacement::kAfterAffine;
  double bn_gamma_init = 0.001;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;

  double oov_scale = 0.06;
  bool oov_scale_is_variance = false;
  bool share_transform = true;
  bool share_encoder = true;
  double forget_bias_init = 1.0;

  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  // Run the bi-LSTM only as far as the longest sentence in a batch instead
  // of the full seq_len. Results are identical either way.
  bool trim_padding = true;

  std::uint64_t seed = 1;
  std::uint64_t oov_seed = 2;

  /// Standard deviation of the OOV sampler.
  double oov_stddev() const;
  /// Width of one phrase encoding for the selected encoder.
  std::size_t encoding_dim() const;

  /// Sets one key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Every key, one per line, in a fixed order.
  std::string to_text() const;
  /// Applies "key=value" lines on top of the current values. Blank lines and
  /// lines starting with '#' are ignored.
  void apply_text(std::string_view text);

  static ModelConfig from_text(std::string_view text);
  static ModelConfig from_file(const std::filesystem::path& path);

  bool operator==(const ModelConfig&) const = default;
};

std::string_view encoder_name(EncoderKind kind);

}  // namespace compnli
