// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace rps {

/// Planar point or vector in meters (or m/s for velocities).
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

}  // namespace rps
