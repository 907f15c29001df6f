// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/multilateration.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "rps/error.hpp"

namespace rps {

LinearSystem build_linear_system(std::span<const Anchor> anchors,
                                 std::span<const double> distances) {
  if (anchors.size() != distances.size()) {
    throw ContractError("build_linear_system: " + std::to_string(anchors.size()) +
                        " anchors but " + std::to_string(distances.size()) + " distances");
  }
  if (anchors.size() < static_cast<std::size_t>(kMinAnchors)) {
    throw InsufficientAnchorsError("multilateration needs at least 4 anchors, got " +
                                   std::to_string(anchors.size()));
  }
  std::set<BandId> ids;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!ids.insert(anchors[i].id).second) {
      throw ContractError("build_linear_system: duplicate anchor id " +
                          std::to_string(anchors[i].id));
    }
    if (!anchors[i].position.allFinite()) throw ContractError("build_linear_system: non-finite anchor");
    if (!(distances[i] >= 0.0) || !std::isfinite(distances[i])) {
      throw ContractError("build_linear_system: distances must be finite and >= 0");
    }
  }

  const auto rows = static_cast<Eigen::Index>(anchors.size() - 1);
  LinearSystem sys{Eigen::MatrixX2d(rows, 2), Eigen::VectorXd(rows)};
  const double x1 = anchors[0].position.x();
  const double y1 = anchors[0].position.y();
  const double d1 = distances[0];
  for (Eigen::Index j = 0; j < rows; ++j) {
    const auto& p = anchors[static_cast<std::size_t>(j + 1)].position;
    const double dj = distances[static_cast<std::size_t>(j + 1)];
    sys.a(j, 0) = 2.0 * (x1 - p.x());
    sys.a(j, 1) = 2.0 * (y1 - p.y());
    sys.b(j) = x1 * x1 - p.x() * p.x() + y1 * y1 - p.y() * p.y() + dj * dj - d1 * d1;
  }
  return sys;
}

LsqSolution solve_lsq(const Eigen::MatrixX2d& a, const Eigen::VectorXd& b, double condition_cap) {
  if (a.rows() < 2) throw ContractError("solve_lsq: A needs at least 2 rows");
  if (a.rows() != b.size()) throw ContractError("solve_lsq: A and b disagree in length");

  const Eigen::JacobiSVD<Eigen::MatrixX2d> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(a.rows()) * s(0);
  if (!(s(0) > 0.0) || !(s(1) > tol)) {
    throw DegenerateGeometryError("anchor geometry is rank deficient");
  }
  const double cond = s(0) / s(1);
  if (cond > condition_cap) {
    throw DegenerateGeometryError("anchor geometry condition " + std::to_string(cond) +
                                  " exceeds cap");
  }
  LsqSolution out;
  out.position = svd.solve(b);
  out.residual_norm = (a * out.position - b).norm();
  out.condition = cond;
  return out;
}

PositionFix fix_position(std::span<const Anchor> anchors, std::span<const double> distances,
                         double timestamp, double condition_cap) {
  const LinearSystem sys = build_linear_system(anchors, distances);
  const LsqSolution sol = solve_lsq(sys.a, sys.b, condition_cap);
  return PositionFix{sol.position, sol.residual_norm, sol.condition,
                     static_cast<int>(anchors.size()), timestamp};
}

}  // namespace rps
