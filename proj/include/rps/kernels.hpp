// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops used by sweep statistics, the simulator and the
// anchor survey. Each kernel has a scalar reference and an AVX2 variant; the
// variant is picked at runtime from the CPU features. All kernels use only
// correctly rounded IEEE operations in a fixed order, so every variant
// produces bit-identical results to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace rps::kernels {

enum class Isa { scalar, avx2 };

/// The instruction set the dispatcher currently routes to.
Isa active_isa() noexcept;

/// True when the running CPU (and the build) can execute `isa`.
bool isa_available(Isa isa) noexcept;

/// Pin the dispatcher to `isa`. Throws ContractError if unavailable.
/// The environment variable RPS_SIMD=scalar forces the scalar path at startup.
void force_isa(Isa isa);

std::string_view isa_name(Isa isa) noexcept;

/// Per-column statistics of a row-major `rows x cols` matrix.
/// mean[c] = (sum over rows in order) / rows; min/max exact.
/// Requires rows >= 1 and every output span to have `cols` elements.
void column_stats(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                  std::span<double> mean, std::span<double> min, std::span<double> max);

/// out[i] = sqrt((xs[i]-qx)^2 + (ys[i]-qy)^2).
void distances_to_point(std::span<const double> xs, std::span<const double> ys, double qx,
                        double qy, std::span<double> out);

namespace scalar {
void column_stats(const double* matrix, std::size_t rows, std::size_t cols, double* mean,
                  double* min, double* max) noexcept;
void distances_to_point(const double* xs, const double* ys, std::size_t n, double qx, double qy,
                        double* out) noexcept;
}  // namespace scalar

namespace avx2 {
void column_stats(const double* matrix, std::size_t rows, std::size_t cols, double* mean,
                  double* min, double* max) noexcept;
void distances_to_point(const double* xs, const double* ys, std::size_t n, double qx, double qy,
                        double* out) noexcept;
}  // namespace avx2

}  // namespace rps::kernels
