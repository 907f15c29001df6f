// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2 only; reached solely through the runtime dispatcher.
#include <immintrin.h>

#include "rps/kernels.hpp"

namespace rps::kernels::avx2 {

void column_stats(const double* matrix, std::size_t rows, std::size_t cols, double* mean,
                  double* min, double* max) noexcept {
  const std::size_t vec_end = cols - cols % 4;
  const __m256d n = _mm256_set1_pd(static_cast<double>(rows));
  for (std::size_t c = 0; c < vec_end; c += 4) {
    __m256d sum = _mm256_loadu_pd(matrix + c);
    __m256d lo = sum;
    __m256d hi = sum;
    for (std::size_t r = 1; r < rows; ++r) {
      const __m256d v = _mm256_loadu_pd(matrix + r * cols + c);
      sum = _mm256_add_pd(sum, v);
      // min_pd(a, b) returns b unless a < b: matches `v < lo ? v : lo`.
      lo = _mm256_min_pd(v, lo);
      hi = _mm256_max_pd(v, hi);
    }
    _mm256_storeu_pd(mean + c, _mm256_div_pd(sum, n));
    _mm256_storeu_pd(min + c, lo);
    _mm256_storeu_pd(max + c, hi);
  }
  if (vec_end < cols) {
    // Tail columns go through the reference loop on a strided view.
    for (std::size_t c = vec_end; c < cols; ++c) {
      double s = matrix[c];
      double l = s;
      double h = s;
      for (std::size_t r = 1; r < rows; ++r) {
        const double v = matrix[r * cols + c];
        s = s + v;
        l = v < l ? v : l;
        h = v > h ? v : h;
      }
      mean[c] = s / static_cast<double>(rows);
      min[c] = l;
      max[c] = h;
    }
  }
}

void distances_to_point(const double* xs, const double* ys, std::size_t n, double qx, double qy,
                        double* out) noexcept {
  const __m256d vx = _mm256_set1_pd(qx);
  const __m256d vy = _mm256_set1_pd(qy);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vy);
    const __m256d sq = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(sq));
  }
  if (i < n) scalar::distances_to_point(xs + i, ys + i, n - i, qx, qy, out + i);
}

}  // namespace rps::kernels::avx2
