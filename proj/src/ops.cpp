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

#include "compnli/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace compnli {
namespace {

std::string pair_shapes(const Var& a, const Var& b) {
  return shape_string(a.shape()) + " and " + shape_string(b.shape());
}

void require_matrix(const Var& v, const char* op) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string(op) + " expects a rank 2 tensor, got " +
                         shape_string(v.shape()));
  }
}

void add_into(Tensor* dst, std::span<const double> src) {
  auto d = dst->data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

enum class Binary { kAdd, kSub, kMul };

Var elementwise(Binary op, Var a, Var b, const char* name) {
  const bool a_scalar = a.size() == 1 && b.size() != 1;
  const bool b_scalar = b.size() == 1 && a.size() != 1;
  if (!a_scalar && !b_scalar && a.shape() != b.shape()) {
    throw DimensionError(std::string(name) + ": shape mismatch " + pair_shapes(a, b));
  }
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(a_scalar ? bv.shape() : av.shape());
  const std::size_t n = out.size();
  auto o = out.data();
  auto x = av.data();
  auto y = bv.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = a_scalar ? x[0] : x[i];
    const double yi = b_scalar ? y[0] : y[i];
    switch (op) {
      case Binary::kAdd: o[i] = xi + yi; break;
      case Binary::kSub: o[i] = xi - yi; break;
      case Binary::kMul: o[i] = xi * yi; break;
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    auto g = t.upstream(self).data();
    auto xa = t.value(ia).data();
    auto xb = t.value(ib).data();
    if (Tensor* da = t.grad_slot(ia)) {
      auto d = da->data();
      for (std::size_t i = 0; i < n; ++i) {
        double gi = g[i];
        if (op == Binary::kMul) gi *= b_scalar ? xb[0] : xb[i];
        d[a_scalar ? 0 : i] += gi;
      }
    }
    if (Tensor* db = t.grad_slot(ib)) {
      auto d = db->data();
      for (std::size_t i = 0; i < n; ++i) {
        double gi = g[i];
        if (op == Binary::kSub) gi = -gi;
        if (op == Binary::kMul) gi *= a_scalar ? xa[0] : xa[i];
        d[b_scalar ? 0 : i] += gi;
      }
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw DimensionError("matmul: inner dimensions differ for " + pair_shapes(a, b));
  Tensor out({m, n});
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n, false);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    if (Tensor* da = t.grad_slot(ia)) gemm_nt(g.data(), t.value(ib).data(), da->data(), m, n, k, true);
    if (Tensor* db = t.grad_slot(ib)) gemm_tn_acc(t.value(ia).data(), g.data(), db->data(), m, k, n);
  });
}

Var transpose(Var a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out({c, r});
  transpose_into(a.value().data(), out.data(), r, c);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      std::vector<double> tmp(r * c);
      transpose_into(t.upstream(self).data(), tmp, c, r);
      add_into(da, tmp);
    }
  });
}

Var add(Var a, Var b) { return elementwise(Binary::kAdd, a, b, "add"); }
Var sub(Var a, Var b) { return elementwise(Binary::kSub, a, b, "sub"); }
Var mul(Var a, Var b) { return elementwise(Binary::kMul, a, b, "mul"); }

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.storage()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      auto g = t.upstream(self).data();
      auto d = da->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (bias.value().rank() != 1 || bias.size() != cols) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not fit rows of " +
                         shape_string(x.shape()));
  }
  Tensor out = x.value();
  auto bv = bias.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) row[c] += bv[c];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {x, bias}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    if (Tensor* dx = t.grad_slot(ix)) add_into(dx, g.data());
    if (Tensor* db = t.grad_slot(ib)) {
      auto d = db->data();
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        for (std::size_t c = 0; c < cols; ++c) d[c] += gr[c];
      }
    }
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.storage()) v = stable_sigmoid(v);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      auto g = t.upstream(self).data();
      auto y = t.value(self).data();
      auto d = da->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.storage()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      auto g = t.upstream(self).data();
      auto y = t.value(self).data();
      auto d = da->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Var softmax(Var a) {
  Tensor out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const Tensor& g = t.upstream(self);
      const Tensor& y = t.value(self);
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        auto yr = y.row(r);
        auto dr = da->row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
        for (std::size_t c = 0; c < cols; ++c) dr[c] += yr[c] * (gr[c] - dot);
      }
    }
  });
}

Var row_normalize(Var a, double min_abs_sum) {
  Tensor out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  std::vector<double> sums(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    double total = 0.0;
    for (double v : row) total += v;
    if (std::abs(total) < min_abs_sum) {
      throw ArgumentError("row_normalize: row " + std::to_string(r) + " sums to " +
                          std::to_string(total) + ", too close to zero to normalise");
    }
    for (double& v : row) v /= total;
    sums[r] = total;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const Tensor& g = t.upstream(self);
      const Tensor& y = t.value(self);
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        auto yr = y.row(r);
        auto dr = da->row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
        for (std::size_t c = 0; c < cols; ++c) dr[c] += (gr[c] - dot) / sums[r];
      }
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(total), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const double g = t.upstream(self)[0];
      for (double& v : da->storage()) v += g;
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat: empty part list");
  const std::size_t rows = parts[0].rows();
  bool all_vectors = true;
  std::size_t total = 0;
  std::vector<std::size_t> widths, ids;
  for (const Var& p : parts) {
    if (p.value().rank() > 2) throw DimensionError("concat: parts must be vectors or matrices");
    if (p.rows() != rows) {
      throw DimensionError("concat: row counts differ for " + pair_shapes(parts[0], p));
    }
    all_vectors = all_vectors && p.value().rank() == 1;
    widths.push_back(p.cols());
    ids.push_back(p.id());
    total += p.cols();
  }
  Tensor out(all_vectors ? Shape{total} : Shape{rows, total});
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      auto src = parts[i].value().row(r);
      std::copy(src.begin(), src.end(), dst.begin() + offset);
      offset += widths[i];
    }
  }
  return parts[0].tape().record(std::move(out), parts, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (Tensor* d = t.grad_slot(ids[i])) {
        for (std::size_t r = 0; r < rows; ++r) {
          auto gr = g.row(r);
          auto dr = d->row(r);
          for (std::size_t c = 0; c < widths[i]; ++c) dr[c] += gr[offset + c];
        }
      }
      offset += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: empty part list");
  const std::size_t cols = parts[0].cols();
  std::size_t total = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: widths differ for " + pair_shapes(parts[0], p));
    }
    total += p.rows();
    ids.push_back(p.id());
  }
  Tensor out({total, cols});
  auto dst = out.data();
  std::size_t offset = 0;
  for (const Var& p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), dst.begin() + offset);
    offset += src.size();
  }
  return parts[0].tape().record(std::move(out), parts, [=](Tape& t, std::size_t self) {
    auto g = t.upstream(self).data();
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      const std::size_t n = t.value(id).size();
      if (Tensor* d = t.grad_slot(id)) add_into(d, g.subspan(offset, n));
      offset += n;
    }
  });
}

Var slice(Var a, std::size_t begin, std::size_t length) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (length == 0 || begin + length > cols) {
    throw DimensionError("slice: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + length) + ") out of range for " +
                         shape_string(a.shape()));
  }
  Tensor out(a.value().rank() == 1 ? Shape{length} : Shape{rows, length});
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = a.value().row(r).subspan(begin, length);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const Tensor& g = t.upstream(self);
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        auto dr = da->row(r);
        for (std::size_t c = 0; c < length; ++c) dr[begin + c] += gr[c];
      }
    }
  });
}

Var gather_rows(Var a, std::span<const std::ptrdiff_t> indices) {
  if (indices.empty()) throw ArgumentError("gather_rows: empty index list");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<std::ptrdiff_t> idx(indices.begin(), indices.end());
  Tensor out({idx.size(), cols});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    if (static_cast<std::size_t>(idx[i]) >= rows) {
      throw ArgumentError("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                          shape_string(a.shape()));
    }
    auto src = a.value().row(static_cast<std::size_t>(idx[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const Tensor& g = t.upstream(self);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0) continue;
        auto gr = g.row(i);
        auto dr = da->row(static_cast<std::size_t>(idx[i]));
        for (std::size_t c = 0; c < cols; ++c) dr[c] += gr[c];
      }
    }
  });
}

Var select_rows(std::span<const std::uint8_t> take, Var on_true, Var on_false) {
  if (on_true.shape() != on_false.shape()) {
    throw DimensionError("select_rows: shape mismatch " + pair_shapes(on_true, on_false));
  }
  const std::size_t rows = on_true.rows(), cols = on_true.cols();
  if (take.size() != rows) {
    throw DimensionError("select_rows: " + std::to_string(take.size()) + " flags for " +
                         std::to_string(rows) + " rows");
  }
  std::vector<std::uint8_t> flags(take.begin(), take.end());
  Tensor out = on_false.value();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!flags[r]) continue;
    auto src = on_true.value().row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const std::size_t it = on_true.id(), iff = on_false.id();
  return on_true.tape().record(std::move(out), {on_true, on_false}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor* dt = t.grad_slot(it);
    Tensor* df = t.grad_slot(iff);
    for (std::size_t r = 0; r < rows; ++r) {
      Tensor* d = flags[r] ? dt : df;
      if (d == nullptr) continue;
      auto gr = g.row(r);
      auto dr = d->row(r);
      for (std::size_t c = 0; c < cols; ++c) dr[c] += gr[c];
    }
  });
}

Var scale_rows(Var a, Var weights, std::size_t column) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (weights.rows() != rows || column >= weights.cols()) {
    throw DimensionError("scale_rows: weights " + shape_string(weights.shape()) +
                         " column " + std::to_string(column) + " does not fit " +
                         shape_string(a.shape()));
  }
  const std::size_t wcols = weights.cols();
  Tensor out = a.value();
  auto w = weights.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& v : out.row(r)) v *= w[r * wcols + column];
  }
  const std::size_t ia = a.id(), iw = weights.id();
  return a.tape().record(std::move(out), {a, weights}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    auto wv = t.value(iw).data();
    if (Tensor* da = t.grad_slot(ia)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double f = wv[r * wcols + column];
        auto gr = g.row(r);
        auto dr = da->row(r);
        for (std::size_t c = 0; c < cols; ++c) dr[c] += f * gr[c];
      }
    }
    if (Tensor* dw = t.grad_slot(iw)) {
      const Tensor& av = t.value(ia);
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        auto ar = av.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * ar[c];
        (*dw)[r * wcols + column] += dot;
      }
    }
  });
}

Var scale_rows(Var a, std::span<const double> factors) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (factors.size() != rows) {
    throw DimensionError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                         shape_string(a.shape()));
  }
  std::vector<double> f(factors.begin(), factors.end());
  Tensor out = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& v : out.row(r)) v *= f[r];
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    if (Tensor* da = t.grad_slot(ia)) {
      const Tensor& g = t.upstream(self);
      for (std::size_t r = 0; r < rows; ++r) {
        auto gr = g.row(r);
        auto dr = da->row(r);
        for (std::size_t c = 0; c < cols; ++c) dr[c] += f[r] * gr[c];
      }
    }
  });
}

namespace {

void check_norm_shapes(const Var& x, const Var& gamma, const Var& beta, const char* op) {
  require_matrix(x, op);
  if (gamma.size() != x.cols() || beta.size() != x.cols() || gamma.value().rank() != 1 ||
      beta.value().rank() != 1) {
    throw DimensionError(std::string(op) + ": gamma " + shape_string(gamma.shape()) + " / beta " +
                         shape_string(beta.shape()) + " do not match " + shape_string(x.shape()));
  }
}

}  // namespace

Var batch_norm_train(Var x, Var gamma, Var beta, double eps, Tensor* batch_mean,
                     Tensor* batch_var) {
  check_norm_shapes(x, gamma, beta, "batch_norm_train");
  const std::size_t rows = x.rows(), cols = x.cols();
  if (rows < 2) throw ArgumentError("batch_norm_train: needs at least 2 rows, got 1");
  const Tensor& xv = x.value();
  std::vector<double> mean(cols, 0.0), var(cols, 0.0), inv_std(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = xv.row(r);
    for (std::size_t c = 0; c < cols; ++c) mean[c] += xr[c];
  }
  for (double& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = xv.row(r);
    for (std::size_t c = 0; c < cols; ++c) var[c] += (xr[c] - mean[c]) * (xr[c] - mean[c]);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    var[c] /= static_cast<double>(rows);
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  }
  Tensor xhat({rows, cols});
  Tensor out({rows, cols});
  auto gv = gamma.value().data();
  auto bv = beta.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = xv.row(r);
    auto hr = xhat.row(r);
    auto orow = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      hr[c] = (xr[c] - mean[c]) * inv_std[c];
      orow[c] = gv[c] * hr[c] + bv[c];
    }
  }
  if (batch_mean) *batch_mean = Tensor({cols}, mean);
  if (batch_var) *batch_var = Tensor({cols}, var);
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(std::move(out), {x, gamma, beta},
                         [=, xhat = std::move(xhat)](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    auto gam = t.value(ig).data();
    if (Tensor* dg = t.grad_slot(ig)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) (*dg)[c] += g.at(r, c) * xhat.at(r, c);
      }
    }
    if (Tensor* db = t.grad_slot(ib)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) (*db)[c] += g.at(r, c);
      }
    }
    if (Tensor* dx = t.grad_slot(ix)) {
      std::vector<double> sum_d(cols, 0.0), sum_dh(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double dh = g.at(r, c) * gam[c];
          sum_d[c] += dh;
          sum_dh[c] += dh * xhat.at(r, c);
        }
      }
      const double n = static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double dh = g.at(r, c) * gam[c];
          dx->at(r, c) += inv_std[c] / n * (n * dh - sum_d[c] - xhat.at(r, c) * sum_dh[c]);
        }
      }
    }
  });
}

Var batch_norm_fixed(Var x, Var gamma, Var beta, const Tensor& mean, const Tensor& var,
                     double eps) {
  check_norm_shapes(x, gamma, beta, "batch_norm_fixed");
  const std::size_t rows = x.rows(), cols = x.cols();
  if (mean.size() != cols || var.size() != cols) {
    throw DimensionError("batch_norm_fixed: statistics " + shape_string(mean.shape()) +
                         " do not match " + shape_string(x.shape()));
  }
  std::vector<double> inv_std(cols);
  for (std::size_t c = 0; c < cols; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  std::vector<double> mu(mean.data().begin(), mean.data().end());
  Tensor out({rows, cols});
  auto gv = gamma.value().data();
  auto bv = beta.value().data();
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.at(r, c) = gv[c] * ((xv.at(r, c) - mu[c]) * inv_std[c]) + bv[c];
    }
  }
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(std::move(out), {x, gamma, beta}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& xin = t.value(ix);
    auto gam = t.value(ig).data();
    Tensor* dx = t.grad_slot(ix);
    Tensor* dg = t.grad_slot(ig);
    Tensor* db = t.grad_slot(ib);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double gi = g.at(r, c);
        if (dx) dx->at(r, c) += gi * gam[c] * inv_std[c];
        if (dg) (*dg)[c] += gi * (xin.at(r, c) - mu[c]) * inv_std[c];
        if (db) (*db)[c] += gi;
      }
    }
  });
}

Var nll_loss(Var probs, std::span<const int> gold, double floor) {
  const std::size_t rows = probs.rows(), cols = probs.cols();
  if (gold.size() != rows) {
    throw DimensionError("nll_loss: " + std::to_string(gold.size()) + " labels for " +
                         shape_string(probs.shape()));
  }
  std::vector<int> labels(gold.begin(), gold.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= cols) {
      throw ArgumentError("nll_loss: label " + std::to_string(labels[r]) + " out of range");
    }
    total -= std::log(std::max(probs.value().at(r, labels[r]), floor));
  }
  const double n = static_cast<double>(rows);
  const std::size_t ip = probs.id();
  return probs.tape().record(Tensor::scalar(total / n), {probs}, [=](Tape& t, std::size_t self) {
    if (Tensor* dp = t.grad_slot(ip)) {
      const double g = t.upstream(self)[0];
      const Tensor& p = t.value(ip);
      for (std::size_t r = 0; r < rows; ++r) {
        const double pr = p.at(r, labels[r]);
        if (pr > floor) dp->at(r, labels[r]) -= g / (n * pr);
      }
    }
  });
}

}  // namespace compnli
