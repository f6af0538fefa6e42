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

#include "compnli/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#if defined(__AVX2__) || defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace compnli {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return vector(std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("vector must be non-empty");
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

std::size_t Tensor::rows() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.back();
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ArgumentError("item() requires a single-element tensor, got " + shape_string(shape_));
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kColBlock = 16;

// Every output element is produced by the same chain of fused multiply-adds
// over k (fma is correctly rounded), whichever path handles its block.
inline void gemm_block_scalar(const double* a, const double* b, double* out, std::size_t rb,
                              std::size_t cb, std::size_t k, std::size_t n, bool accumulate) {
  double acc[kRowBlock][kColBlock];
  for (std::size_t r = 0; r < rb; ++r) {
    for (std::size_t c = 0; c < cb; ++c) acc[r][c] = accumulate ? out[r * n + c] : 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t r = 0; r < rb; ++r) {
      const double av = a[r * k + p];
      for (std::size_t c = 0; c < cb; ++c) acc[r][c] = std::fma(av, brow[c], acc[r][c]);
    }
  }
  for (std::size_t r = 0; r < rb; ++r) {
    for (std::size_t c = 0; c < cb; ++c) out[r * n + c] = acc[r][c];
  }
}

#if defined(__AVX512F__)
template <std::size_t RB>
inline void gemm_block_simd(const double* a, const double* b, double* out, std::size_t k,
                            std::size_t n, bool accumulate) {
  __m512d acc[RB][2];
  for (std::size_t r = 0; r < RB; ++r) {
    acc[r][0] = accumulate ? _mm512_loadu_pd(out + r * n) : _mm512_setzero_pd();
    acc[r][1] = accumulate ? _mm512_loadu_pd(out + r * n + 8) : _mm512_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m512d b0 = _mm512_loadu_pd(b + p * n);
    const __m512d b1 = _mm512_loadu_pd(b + p * n + 8);
    for (std::size_t r = 0; r < RB; ++r) {
      const __m512d av = _mm512_set1_pd(a[r * k + p]);
      acc[r][0] = _mm512_fmadd_pd(av, b0, acc[r][0]);
      acc[r][1] = _mm512_fmadd_pd(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < RB; ++r) {
    _mm512_storeu_pd(out + r * n, acc[r][0]);
    _mm512_storeu_pd(out + r * n + 8, acc[r][1]);
  }
}
#elif defined(__AVX2__) && defined(__FMA__)
template <std::size_t RB>
inline void gemm_block_simd(const double* a, const double* b, double* out, std::size_t k,
                            std::size_t n, bool accumulate) {
  for (std::size_t half = 0; half < 2; ++half) {
    const double* bh = b + half * 8;
    double* oh = out + half * 8;
    __m256d acc[RB][2];
    for (std::size_t r = 0; r < RB; ++r) {
      acc[r][0] = accumulate ? _mm256_loadu_pd(oh + r * n) : _mm256_setzero_pd();
      acc[r][1] = accumulate ? _mm256_loadu_pd(oh + r * n + 4) : _mm256_setzero_pd();
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(bh + p * n);
      const __m256d b1 = _mm256_loadu_pd(bh + p * n + 4);
      for (std::size_t r = 0; r < RB; ++r) {
        const __m256d av = _mm256_set1_pd(a[r * k + p]);
        acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
      }
    }
    for (std::size_t r = 0; r < RB; ++r) {
      _mm256_storeu_pd(oh + r * n, acc[r][0]);
      _mm256_storeu_pd(oh + r * n + 4, acc[r][1]);
    }
  }
}
#else
template <std::size_t RB>
inline void gemm_block_simd(const double* a, const double* b, double* out, std::size_t k,
                            std::size_t n, bool accumulate) {
  gemm_block_scalar(a, b, out, RB, kColBlock, k, n, accumulate);
}
#endif

}  // namespace

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t cb = std::min(kColBlock, n - j0);
    for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
      const std::size_t rb = std::min(kRowBlock, m - i0);
      const double* ap = a.data() + i0 * k;
      const double* bp = b.data() + j0;
      double* op = out.data() + i0 * n + j0;
      if (cb != kColBlock) {
        gemm_block_scalar(ap, bp, op, rb, cb, k, n, accumulate);
        continue;
      }
      switch (rb) {
        case 4: gemm_block_simd<4>(ap, bp, op, k, n, accumulate); break;
        case 3: gemm_block_simd<3>(ap, bp, op, k, n, accumulate); break;
        case 2: gemm_block_simd<2>(ap, bp, op, k, n, accumulate); break;
        default: gemm_block_simd<1>(ap, bp, op, k, n, accumulate); break;
      }
    }
  }
}

void transpose_into(std::span<const double> a, std::span<double> out, std::size_t rows,
                    std::size_t cols) {
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t r1 = std::min(rows, r0 + kTile);
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = a[r * cols + c];
      }
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  std::vector<double> bt(k * n);
  transpose_into(b, bt, n, k);
  gemm_nn(a, bt, out, m, k, n, accumulate);
}

void gemm_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> out,
                 std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> at(k * m);
  transpose_into(a, at, m, k);
  gemm_nn(at, b, out, k, m, n, true);
}

}  // namespace compnli
