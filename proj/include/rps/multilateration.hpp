// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "rps/geometry.hpp"
#include "rps/sweep.hpp"

namespace rps {

/// A transmitter's coordinate in the relative frame.
struct Anchor {
  BandId id = 0;
  Vec2 position = Vec2::Zero();
};

struct LinearSystem {
  Eigen::MatrixX2d a;
  Eigen::VectorXd b;
};

struct LsqSolution {
  Vec2 position = Vec2::Zero();
  double residual_norm = 0.0;
  /// Ratio of extreme singular values of A (>= 1).
  double condition = 1.0;
};

struct PositionFix {
  Vec2 position = Vec2::Zero();
  double residual_norm = 0.0;
  double condition_estimate = 1.0;
  int anchor_count = 0;
  double timestamp = 0.0;
};

constexpr int kMinAnchors = 4;
constexpr double kDefaultConditionCap = 1e8;

/// Circle equations linearized by subtracting the first anchor's equation:
/// row j of A = 2 [x1 - x_{j+1}, y1 - y_{j+1}],
/// b_j = x1^2 - x_{j+1}^2 + y1^2 - y_{j+1}^2 + d_{j+1}^2 - d1^2.
LinearSystem build_linear_system(std::span<const Anchor> anchors, std::span<const double> distances);

/// Least-squares solution of A x = b via SVD. Rank < 2 or condition above
/// `condition_cap` -> DegenerateGeometryError. Fewer than two rows -> ContractError.
LsqSolution solve_lsq(const Eigen::MatrixX2d& a, const Eigen::VectorXd& b,
                      double condition_cap = kDefaultConditionCap);

PositionFix fix_position(std::span<const Anchor> anchors, std::span<const double> distances,
                         double timestamp, double condition_cap = kDefaultConditionCap);

}  // namespace rps
