// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <span>
#include <vector>

#include "rps/geometry.hpp"

namespace rps {

enum class SmootherKind { wma, sma };

struct SmootherConfig {
  SmootherKind kind = SmootherKind::wma;
  int window = 3;
  /// Oldest first; empty means the linear ramp 1..window.
  std::vector<double> weights;

  /// Effective weights (ramp when unset, all ones for SMA). Throws ConfigError.
  std::vector<double> resolved_weights() const;
  void validate() const;
};

/// Weighted mean of `fixes` (oldest first). Weights are divided by the newest
/// weight before use, so equal weights reduce exactly to sma().
Vec2 wma(std::span<const Vec2> fixes, std::span<const double> weights);

Vec2 sma(std::span<const Vec2> fixes);

/// Streaming smoother over the most recent `window` fixes. During warm-up it
/// uses the trailing weights of the schedule, renormalized.
class MovingAverage {
 public:
  explicit MovingAverage(SmootherConfig config);

  Vec2 push(const Vec2& fix);
  void reset() { history_.clear(); }
  const std::deque<Vec2>& history() const noexcept { return history_; }

 private:
  SmootherConfig config_;
  std::vector<double> weights_;
  std::deque<Vec2> history_;
};

}  // namespace rps
