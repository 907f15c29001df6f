// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/smoothing.hpp"

#include <cmath>
#include <string>

#include "rps/error.hpp"

namespace rps {

std::vector<double> SmootherConfig::resolved_weights() const {
  validate();
  if (kind == SmootherKind::sma) return std::vector<double>(static_cast<std::size_t>(window), 1.0);
  if (!weights.empty()) return weights;
  std::vector<double> ramp(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
  return ramp;
}

void SmootherConfig::validate() const {
  if (window < 1) throw ConfigError("smoother.window must be >= 1");
  if (!weights.empty()) {
    if (weights.size() != static_cast<std::size_t>(window)) {
      throw ConfigError("smoother.weights has " + std::to_string(weights.size()) +
                        " entries, window is " + std::to_string(window));
    }
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("smoother.weights must be positive");
    }
    if (kind == SmootherKind::sma) {
      for (double w : weights) {
        if (w != weights.front()) throw ConfigError("SMA requires equal weights");
      }
    }
  }
}

Vec2 wma(std::span<const Vec2> fixes, std::span<const double> weights) {
  if (fixes.empty()) throw ContractError("wma: empty window");
  if (fixes.size() != weights.size()) throw ContractError("wma: fixes and weights differ in length");
  const double ref = weights.back();
  if (!(ref > 0.0)) throw ContractError("wma: weights must be positive");
  Vec2 acc = Vec2::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    const double w = weights[i] / ref;
    if (!(w > 0.0)) throw ContractError("wma: weights must be positive");
    acc.x() = acc.x() + w * fixes[i].x();
    acc.y() = acc.y() + w * fixes[i].y();
    total = total + w;
  }
  return {acc.x() / total, acc.y() / total};
}

Vec2 sma(std::span<const Vec2> fixes) {
  if (fixes.empty()) throw ContractError("sma: empty window");
  Vec2 acc = Vec2::Zero();
  for (const Vec2& f : fixes) {
    acc.x() = acc.x() + f.x();
    acc.y() = acc.y() + f.y();
  }
  const double n = static_cast<double>(fixes.size());
  return {acc.x() / n, acc.y() / n};
}

MovingAverage::MovingAverage(SmootherConfig config)
    : config_(std::move(config)), weights_(config_.resolved_weights()) {}

Vec2 MovingAverage::push(const Vec2& fix) {
  history_.push_back(fix);
  if (history_.size() > weights_.size()) history_.pop_front();
  const std::vector<Vec2> window(history_.begin(), history_.end());
  if (config_.kind == SmootherKind::sma) return sma(window);
  const std::span<const double> trailing(weights_.data() + (weights_.size() - window.size()),
                                         window.size());
  return wma(window, trailing);
}

}  // namespace rps
