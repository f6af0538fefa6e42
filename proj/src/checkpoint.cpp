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

#include "compnli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "compnli/rng.hpp"

namespace compnli {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint code assumes little-endian");

constexpr char kMagic[4] = {'C', 'N', 'L', 'I'};
constexpr std::string_view kLabelsKey = "labels=";

std::string label_line() {
  std::string s(kLabelsKey);
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (i) s += ',';
    s += kLabelNames[i];
  }
  return s + '\n';
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return value;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - at_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw IntegrityError("checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t at_ = 0;
};

std::string bn_name(const BatchNorm& bn) {
  const std::string& g = bn.gamma.name;
  return g.substr(0, g.size() - std::string_view(".gamma").size());
}

const Tensor& require(const CheckpointContents& c, const std::string& name, const Shape& shape) {
  auto it = c.tensors.find(name);
  if (it == c.tensors.end()) throw IntegrityError("checkpoint has no tensor " + name);
  if (it->second.shape() != shape) {
    throw IntegrityError("tensor " + name + " has shape " + shape_string(it->second.shape()) +
                         ", model expects " + shape_string(shape));
  }
  return it->second;
}

}  // namespace

std::string encode_checkpoint(const CheckpointContents& contents, std::uint32_t version) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(contents.text.size()));
  out += contents.text;
  for (const auto& [name, t] : contents.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put<double>(out, v);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

CheckpointContents decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 + 4 + 4 + 8) throw IntegrityError("checkpoint is truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IntegrityError("not a checkpoint file");
  if (fnv1a64(body) != stored) throw IntegrityError("checkpoint checksum mismatch");

  Reader r(body);
  r.take(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointContents c;
  c.text = std::string(r.take(r.get<std::uint32_t>()));
  while (r.remaining() > 0) {
    std::string name(r.take(r.get<std::uint32_t>()));
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 2) throw IntegrityError("tensor " + name + " has invalid rank");
    Shape shape;
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = r.get<std::uint64_t>();
      if (d == 0 || d > r.remaining()) throw IntegrityError("tensor " + name + " has invalid dimensions");
      shape.push_back(d);
      n *= d;
    }
    if (n > r.remaining() / sizeof(double)) throw IntegrityError("checkpoint is truncated");
    std::vector<double> values(n);
    std::memcpy(values.data(), r.take(n * sizeof(double)).data(), n * sizeof(double));
    if (!c.tensors.emplace(name, Tensor(std::move(shape), std::move(values))).second) {
      throw IntegrityError("duplicate tensor " + name);
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, NliModel& model, const Adam* optimizer) {
  CheckpointContents c;
  c.text = model.config().to_text() + label_line();
  for (Parameter* p : model.parameters()) c.tensors.emplace("param/" + p->name, p->value);
  if (optimizer) {
    auto& opt = const_cast<Adam&>(*optimizer);
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
      c.tensors.emplace("adam.m/" + opt.params()[i]->name, opt.first_moment(i));
      c.tensors.emplace("adam.v/" + opt.params()[i]->name, opt.second_moment(i));
    }
    c.tensors.emplace("adam.step", Tensor::scalar(static_cast<double>(opt.steps())));
  }
  for (BatchNorm* bn : model.norms()) {
    c.tensors.emplace("bn.mean/" + bn_name(*bn), bn->running_mean);
    c.tensors.emplace("bn.var/" + bn_name(*bn), bn->running_var);
  }
  for (auto& row : model.embeddings().rows_by_token()) {
    c.tensors.emplace((row.oov ? "oov/" : "emb/") + row.token, Tensor::vector(std::move(row.values)));
  }

  const std::string bytes = encode_checkpoint(c);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error while writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

std::unique_ptr<Adam> make_optimizer(NliModel& model) {
  const ModelConfig& c = model.config();
  return std::make_unique<Adam>(model.parameters(), AdamOptions{c.lr, c.beta1, c.beta2, c.adam_eps});
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const CheckpointContents c = decode_checkpoint(buf.str());

  // The label line is checked separately; the rest is plain config.
  const std::size_t at = c.text.find(kLabelsKey);
  if (at == std::string::npos || c.text.compare(at, std::string::npos, label_line()) != 0) {
    throw VersionError("checkpoint uses a different label order");
  }
  ModelConfig config;
  try {
    config = ModelConfig::from_text(std::string_view(c.text).substr(0, at));
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint config: ") + e.what());
  }

  EmbeddingTable table = make_embedding_table(config);
  std::size_t used = 0;
  for (const auto& [name, t] : c.tensors) {
    const bool emb = name.starts_with("emb/"), oov = name.starts_with("oov/");
    if (!emb && !oov) continue;
    if (t.rank() != 1 || t.size() != config.word_dim) throw IntegrityError("bad embedding row " + name);
    if (emb) table.add_row(name.substr(4), t.data());
    else table.restore_oov_row(name.substr(4), t.data());
    ++used;
  }

  LoadedCheckpoint out;
  out.model = std::make_unique<NliModel>(config, std::move(table));
  NliModel& model = *out.model;
  for (Parameter* p : model.parameters()) {
    p->value = require(c, "param/" + p->name, p->value.shape());
    ++used;
  }
  for (BatchNorm* bn : model.norms()) {
    bn->running_mean = require(c, "bn.mean/" + bn_name(*bn), bn->running_mean.shape());
    bn->running_var = require(c, "bn.var/" + bn_name(*bn), bn->running_var.shape());
    used += 2;
  }
  if (c.tensors.contains("adam.step")) {
    out.optimizer = make_optimizer(model);
    Adam& opt = *out.optimizer;
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
      const Parameter* p = opt.params()[i];
      opt.first_moment(i) = require(c, "adam.m/" + p->name, p->value.shape());
      opt.second_moment(i) = require(c, "adam.v/" + p->name, p->value.shape());
      used += 2;
    }
    opt.set_steps(static_cast<std::uint64_t>(require(c, "adam.step", {1}).item()));
    ++used;
  }
  if (used != c.tensors.size()) throw IntegrityError("checkpoint has tensors the model does not use");
  return out;
}

}  // namespace compnli
