// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "rps/error.hpp"

namespace rps::kernels {

namespace scalar {

void column_stats(const double* matrix, std::size_t rows, std::size_t cols, double* mean,
                  double* min, double* max) noexcept {
  for (std::size_t c = 0; c < cols; ++c) {
    mean[c] = matrix[c];
    min[c] = matrix[c];
    max[c] = matrix[c];
  }
  for (std::size_t r = 1; r < rows; ++r) {
    const double* row = matrix + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = row[c];
      mean[c] = mean[c] + v;
      // Written as selects so NaN-free inputs match _mm256_min_pd/_mm256_max_pd exactly.
      min[c] = v < min[c] ? v : min[c];
      max[c] = v > max[c] ? v : max[c];
    }
  }
  const double n = static_cast<double>(rows);
  for (std::size_t c = 0; c < cols; ++c) mean[c] = mean[c] / n;
}

void distances_to_point(const double* xs, const double* ys, std::size_t n, double qx, double qy,
                        double* out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    out[i] = std::sqrt(dx * dx + dy * dy);
  }
}

}  // namespace scalar

namespace {

#if defined(RPS_HAVE_AVX2)
bool cpu_has_avx2() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
}
#else
bool cpu_has_avx2() noexcept { return false; }
#endif

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("RPS_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

void force_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw ContractError("instruction set '" + std::string(isa_name(isa)) + "' is unavailable");
  }
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

void column_stats(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                  std::span<double> mean, std::span<double> min, std::span<double> max) {
  if (rows == 0 || matrix.size() != rows * cols || mean.size() != cols || min.size() != cols ||
      max.size() != cols) {
    throw ContractError("column_stats: shape mismatch");
  }
#if defined(RPS_HAVE_AVX2)
  if (active_isa() == Isa::avx2) {
    avx2::column_stats(matrix.data(), rows, cols, mean.data(), min.data(), max.data());
    return;
  }
#endif
  scalar::column_stats(matrix.data(), rows, cols, mean.data(), min.data(), max.data());
}

void distances_to_point(std::span<const double> xs, std::span<const double> ys, double qx,
                        double qy, std::span<double> out) {
  if (xs.size() != ys.size() || out.size() != xs.size()) {
    throw ContractError("distances_to_point: length mismatch");
  }
#if defined(RPS_HAVE_AVX2)
  if (active_isa() == Isa::avx2) {
    avx2::distances_to_point(xs.data(), ys.data(), xs.size(), qx, qy, out.data());
    return;
  }
#endif
  scalar::distances_to_point(xs.data(), ys.data(), xs.size(), qx, qy, out.data());
}

}  // namespace rps::kernels
