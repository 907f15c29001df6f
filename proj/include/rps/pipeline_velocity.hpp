// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rps/geometry.hpp"

namespace rps {

/// Finite-difference velocity (p1 - p0) / (t1 - t0). t1 <= t0 -> ContractError.
Vec2 derive_velocity(const Vec2& p0, double t0, const Vec2& p1, double t1);

}  // namespace rps
