// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Self-survey of the anchor constellation.
//
// A seeded random anchor placement is only related to the real transmitters
// by an arbitrary affine map, which distorts every recovered distance. The
// survey instead estimates the constellation, up to a rigid motion, from the
// ranges a moving receiver observes: it jointly fits T receiver positions and
// K anchor positions to the log-ranges (maximum likelihood under log-normal
// shadowing) with Levenberg-Marquardt, from several deterministic starts.
// The result is then rigidly aligned to the seeded placement so the seed still
// selects the frame's orientation and offset.

#include <cstdint>
#include <span>
#include <vector>

#include "rps/geometry.hpp"

namespace rps {

struct SurveyOptions {
  int starts = 12;
  int max_iterations = 200;
  /// Second-difference prior on the receiver track (meters per step^2); 0 disables it.
  double smoothness_sigma_m = 2.0;
  /// Standard deviation of a log-range (ln units), weighting data against the prior.
  double log_range_sigma = 0.33;
  /// Sweeps averaged (in log-range) for the first start's closed-form estimate.
  int init_smoothing_sweeps = 9;
  std::uint64_t seed = 1;
  /// Smallest minor-axis standard deviation of the estimated track (meters).
  double min_track_extent_m = 25.0;
  /// Largest allowed worst-case anchor standard deviation, as a fraction of
  /// the constellation's RMS radius.
  double max_anchor_sigma_fraction = 0.25;
};

struct SurveyResult {
  std::vector<Vec2> anchors;
  std::vector<Vec2> track;
  double cost = 0.0;
  double rms_log_residual = 0.0;
  double worst_anchor_sigma_m = 0.0;
  double track_minor_extent_m = 0.0;
  int best_start = -1;
  bool observable = false;
};

/// `ranges` is row-major T x K (sweep-major), all > 0. Needs T >= 3 and K >= 4.
SurveyResult survey_anchors(std::span<const double> ranges, std::size_t sweeps,
                            std::size_t anchors, std::span<const Vec2> seed_layout,
                            const SurveyOptions& options);

struct RigidTransform {
  Mat2 rotation = Mat2::Identity();
  Vec2 translation = Vec2::Zero();
  [[nodiscard]] Vec2 apply(const Vec2& p) const { return rotation * p + translation; }
};

/// Orthogonal map (rotation or reflection) plus translation taking `points`
/// onto `reference` with least squared error.
RigidTransform fit_rigid(std::span<const Vec2> points, std::span<const Vec2> reference);

/// Rotation (or reflection) plus translation mapping `points` onto `reference`
/// with least squared error, applied to `points`.
std::vector<Vec2> align_rigid(std::span<const Vec2> points, std::span<const Vec2> reference);

/// Closed-form constellation estimate from squared ranges (metric unfolding of
/// the double-centred squared-distance matrix). Exact for noiseless ranges of a
/// track that spans two dimensions; returns false when the geometry is degenerate.
bool unfold_constellation(std::span<const double> ranges, std::size_t sweeps, std::size_t anchors,
                          std::vector<Vec2>& track, std::vector<Vec2>& constellation);

}  // namespace rps
