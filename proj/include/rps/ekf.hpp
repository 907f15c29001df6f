// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Position-only extended Kalman filter with a velocity input and scalar range
// measurements to landmarks.
//
//   predict:  x <- x + Ts u,        P <- F P F^T + Q   (F = I)
//   update:   H = (x - l)^T / |x - l|
//             K = P H^T / (H P H^T + R)
//             x <- x + K (z - |x - l|),   P <- (I - K H) P, then symmetrized

#include <span>
#include <vector>

#include "rps/geometry.hpp"

namespace rps {

struct TrackState {
  Vec2 position = Vec2::Zero();
  Mat2 covariance = Mat2::Identity() * 10.0;
  double timestep = 1.0;
};

struct NoiseConfig {
  Mat2 q = Mat2::Identity() * 0.1;
  double r = 0.01;
  /// Initial covariance diagonal (m^2).
  double p0 = 10.0;

  void validate() const;
};

struct Landmark {
  Vec2 position = Vec2::Zero();
  int source_index = -1;
};

constexpr double kJacobianEpsilon = 1e-6;
constexpr double kSymmetryTolerance = 1e-9;

/// True when P is symmetric (max |P - P^T| < tol) with min eigenvalue >= -tol.
bool is_symmetric_psd(const Mat2& p, double tol = kSymmetryTolerance);

/// Throws ContractError when Ts <= 0 or P is not PSD.
TrackState predict(const TrackState& state, const Vec2& velocity, const NoiseConfig& noise);

double range_measurement(const Vec2& position, const Vec2& landmark);

/// 1x2 gradient of the range w.r.t. position. Distance <= eps -> SingularGeometryError.
Eigen::RowVector2d range_jacobian(const Vec2& position, const Vec2& landmark,
                                  double eps = kJacobianEpsilon);

struct UpdateResult {
  TrackState state;
  double innovation = 0.0;
  Vec2 gain = Vec2::Zero();
};

UpdateResult update(const TrackState& predicted, double z, const Vec2& landmark,
                    const NoiseConfig& noise);

/// Input for one filter step: the smoothed fix, the measured ranges z to each landmark.
struct TrackInput {
  double timestamp = 0.0;
  Vec2 velocity = Vec2::Zero();
  std::vector<Landmark> landmarks;
  std::vector<double> ranges;
  /// Skip the measurement update (held fix).
  bool predict_only = false;
};

struct TrackStep {
  TrackState state;
  std::vector<double> innovations;
  bool failed = false;
};

/// Sequential filter. The first step initializes the state at `initial`.
class EkfTracker {
 public:
  explicit EkfTracker(NoiseConfig noise);

  void initialize(const Vec2& position, double timestamp);
  bool initialized() const noexcept { return initialized_; }
  /// Predict with the step's velocity, then one scalar update per landmark,
  /// oldest first. A landmark coincident with the state is skipped and the
  /// step flagged as failed.
  TrackStep step(const TrackInput& input);
  const TrackState& state() const noexcept { return state_; }

 private:
  NoiseConfig noise_;
  TrackState state_;
  double last_time_ = 0.0;
  bool initialized_ = false;
};

/// Fixed-lag landmark schedule used by the pipeline: velocity from the last two
/// smoothed fixes, landmarks = previous `window` smoothed fixes, z = distance from
/// the raw fix of the step to each landmark. Returns one state per input fix.
std::vector<TrackStep> track(std::span<const double> timestamps, std::span<const Vec2> smoothed,
                             std::span<const Vec2> raw, int landmark_window,
                             const NoiseConfig& noise);

}  // namespace rps
