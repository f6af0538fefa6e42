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

#include "compnli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace compnli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::size_t parse_size(std::string_view key, std::string_view value, bool allow_zero = false) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || (!allow_zero && out == 0)) {
    bad_value(key, value);
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value);
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view attention_name(AttentionMode m) {
  return m == AttentionMode::kSoftmax ? "softmax" : "literal";
}
std::string_view internal_name(InternalInput i) {
  return i == InternalInput::kZero ? "zero" : "span_mean";
}
std::string_view placement_name(NormPlacement p) {
  return p == NormPlacement::kNone ? "none" : "after_affine";
}

}  // namespace

std::string_view encoder_name(EncoderKind kind) {
  return kind == EncoderKind::kBilstm ? "bilstm" : "btree";
}

double ModelConfig::oov_stddev() const {
  return oov_scale_is_variance ? std::sqrt(oov_scale) : oov_scale;
}

std::size_t ModelConfig::encoding_dim() const {
  return encoder == EncoderKind::kBilstm ? word_dim + 2 * bilstm_hidden : btree_hidden;
}

void ModelConfig::set(std::string_view key, std::string_view value) {
  if (key == "encoder") {
    if (value == "bilstm") encoder = EncoderKind::kBilstm;
    else if (value == "btree") encoder = EncoderKind::kBtree;
    else bad_value(key, value);
  } else if (key == "word_dim") word_dim = parse_size(key, value);
  else if (key == "seq_len") seq_len = parse_size(key, value);
  else if (key == "bilstm_hidden") bilstm_hidden = parse_size(key, value);
  else if (key == "btree_hidden") btree_hidden = parse_size(key, value);
  else if (key == "operators") operators = parse_size(key, value);
  else if (key == "op_hidden") op_hidden = parse_size(key, value);
  else if (key == "op_out") op_out = parse_size(key, value);
  else if (key == "agg_hidden") agg_hidden = parse_size(key, value);
  else if (key == "batch_size") batch_size = parse_size(key, value);
  else if (key == "attention") {
    if (value == "softmax") attention = AttentionMode::kSoftmax;
    else if (value == "literal") attention = AttentionMode::kLiteral;
    else bad_value(key, value);
  } else if (key == "btree_internal_input") {
    if (value == "zero") btree_internal_input = InternalInput::kZero;
    else if (value == "span_mean") btree_internal_input = InternalInput::kSpanMean;
    else bad_value(key, value);
  } else if (key == "bn_placement") {
    if (value == "none") bn_placement = NormPlacement::kNone;
    else if (value == "after_affine") bn_placement = NormPlacement::kAfterAffine;
    else bad_value(key, value);
  } else if (key == "bn_gamma_init") bn_gamma_init = parse_real(key, value);
  else if (key == "bn_momentum") bn_momentum = parse_real(key, value);
  else if (key == "bn_eps") bn_eps = parse_real(key, value);
  else if (key == "oov_scale") oov_scale = parse_real(key, value);
  else if (key == "oov_scale_is_variance") oov_scale_is_variance = parse_bool(key, value);
  else if (key == "share_transform") share_transform = parse_bool(key, value);
  else if (key == "share_encoder") share_encoder = parse_bool(key, value);
  else if (key == "forget_bias_init") forget_bias_init = parse_real(key, value);
  else if (key == "lr") lr = parse_real(key, value);
  else if (key == "beta1") beta1 = parse_real(key, value);
  else if (key == "beta2") beta2 = parse_real(key, value);
  else if (key == "adam_eps") adam_eps = parse_real(key, value);
  else if (key == "max_epochs") max_epochs = parse_size(key, value, true);
  else if (key == "patience") patience = parse_size(key, value);
  else if (key == "trim_padding") trim_padding = parse_bool(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "oov_seed") oov_seed = parse_u64(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  auto put = [&](std::string_view k, const std::string& v) { out << k << '=' << v << '\n'; };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  put("encoder", std::string(encoder_name(encoder)));
  put("word_dim", std::to_string(word_dim));
  put("seq_len", std::to_string(seq_len));
  put("bilstm_hidden", std::to_string(bilstm_hidden));
  put("btree_hidden", std::to_string(btree_hidden));
  put("operators", std::to_string(operators));
  put("op_hidden", std::to_string(op_hidden));
  put("op_out", std::to_string(op_out));
  put("agg_hidden", std::to_string(agg_hidden));
  put("batch_size", std::to_string(batch_size));
  put("attention", std::string(attention_name(attention)));
  put("btree_internal_input", std::string(internal_name(btree_internal_input)));
  put("bn_placement", std::string(placement_name(bn_placement)));
  put("bn_gamma_init", real_text(bn_gamma_init));
  put("bn_momentum", real_text(bn_momentum));
  put("bn_eps", real_text(bn_eps));
  put("oov_scale", real_text(oov_scale));
  put("oov_scale_is_variance", flag(oov_scale_is_variance));
  put("share_transform", flag(share_transform));
  put("share_encoder", flag(share_encoder));
  put("forget_bias_init", real_text(forget_bias_init));
  put("lr", real_text(lr));
  put("beta1", real_text(beta1));
  put("beta2", real_text(beta2));
  put("adam_eps", real_text(adam_eps));
  put("max_epochs", std::to_string(max_epochs));
  put("patience", std::to_string(patience));
  put("trim_padding", flag(trim_padding));
  put("seed", std::to_string(seed));
  put("oov_seed", std::to_string(oov_seed));
  return out.str();
}

void ModelConfig::apply_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  c.apply_text(text);
  return c;
}

ModelConfig ModelConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

}  // namespace compnli
