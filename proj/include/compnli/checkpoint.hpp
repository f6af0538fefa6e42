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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "compnli/model.hpp"
#include "compnli/optimizer.hpp"

// Checkpoint file layout, little-endian:
//
//   "CNLI"  u32 version  u32 text_length  text (config, UTF-8)
//   repeated: u32 name_length  name  u32 rank  u64 dims[rank]  f64 values[...]
//   u64 FNV-1a of every preceding byte
//
// Tensors are written in name order, which makes save -> load -> save
// reproduce the file byte for byte.

namespace compnli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Corrupted or truncated file, or contents that do not fit the model.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Written by an incompatible format version.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointContents {
  std::string text;
  std::map<std::string, Tensor> tensors;
};

std::string encode_checkpoint(const CheckpointContents& contents,
                              std::uint32_t version = kCheckpointVersion);
CheckpointContents decode_checkpoint(std::string_view bytes);

/// Parameters, optimizer state (when given), batch-norm running statistics,
/// embedding rows and cached OOV rows. The file is replaced atomically.
void save_checkpoint(const std::filesystem::path& path, NliModel& model,
                     const Adam* optimizer = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<NliModel> model;
  std::unique_ptr<Adam> optimizer;  // null when the file has no optimizer state
};

/// Throws IoError, IntegrityError or VersionError; nothing is returned on
/// failure.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Optimizer over model.parameters() with the config's Adam settings.
std::unique_ptr<Adam> make_optimizer(NliModel& model);

}  // namespace compnli
