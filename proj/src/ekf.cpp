// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/ekf.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "rps/error.hpp"
#include "rps/pipeline_velocity.hpp"

namespace rps {

void NoiseConfig::validate() const {
  if (!is_symmetric_psd(q)) throw ConfigError("ekf: Q must be symmetric PSD");
  if (!(r > 0.0)) throw ConfigError("ekf: R must be > 0");
  if (!(p0 >= 0.0)) throw ConfigError("ekf: initial covariance must be >= 0");
}

bool is_symmetric_psd(const Mat2& p, double tol) {
  if (!p.allFinite()) return false;
  if ((p - p.transpose()).cwiseAbs().maxCoeff() >= tol) return false;
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(0.5 * (p + p.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

TrackState predict(const TrackState& state, const Vec2& velocity, const NoiseConfig& noise) {
  if (!(state.timestep > 0.0)) throw ContractError("predict: timestep must be > 0");
  if (!is_symmetric_psd(state.covariance)) {
    throw ContractError("predict: incoming covariance is not symmetric PSD");
  }
  TrackState out = state;
  out.position = state.position + state.timestep * velocity;
  out.covariance = state.covariance + noise.q;  // F = I
  return out;
}

double range_measurement(const Vec2& position, const Vec2& landmark) {
  return (landmark - position).norm();
}

Eigen::RowVector2d range_jacobian(const Vec2& position, const Vec2& landmark, double eps) {
  const Vec2 diff = position - landmark;
  const double d = diff.norm();
  if (!(d > eps)) {
    throw SingularGeometryError("range_jacobian: state and landmark coincide");
  }
  return (diff / d).transpose();
}

UpdateResult update(const TrackState& predicted, double z, const Vec2& landmark,
                    const NoiseConfig& noise) {
  if (!is_symmetric_psd(predicted.covariance)) {
    throw ContractError("update: predicted covariance is not symmetric PSD");
  }
  if (!(z >= 0.0)) throw ContractError("update: range must be >= 0");
  const Eigen::RowVector2d h = range_jacobian(predicted.position, landmark);
  const Mat2& p = predicted.covariance;
  const double s = (h * p * h.transpose())(0, 0) + noise.r;
  if (!(s > 0.0)) throw ContractError("update: singular innovation covariance");
  const Vec2 k = p * h.transpose() / s;
  const double innovation = z - range_measurement(predicted.position, landmark);

  UpdateResult out;
  out.state = predicted;
  out.innovation = innovation;
  out.gain = k;
  out.state.position = predicted.position + k * innovation;
  Mat2 next = (Mat2::Identity() - k * h) * p;
  out.state.covariance = 0.5 * (next + next.transpose());
  return out;
}

EkfTracker::EkfTracker(NoiseConfig noise) : noise_(std::move(noise)) { noise_.validate(); }

void EkfTracker::initialize(const Vec2& position, double timestamp) {
  state_.position = position;
  state_.covariance = Mat2::Identity() * noise_.p0;
  state_.timestep = 1.0;
  last_time_ = timestamp;
  initialized_ = true;
}

TrackStep EkfTracker::step(const TrackInput& input) {
  if (!initialized_) throw ContractError("EkfTracker::step before initialize");
  if (input.landmarks.size() != input.ranges.size()) {
    throw ContractError("EkfTracker::step: landmarks and ranges differ in length");
  }
  const double dt = input.timestamp - last_time_;
  if (!(dt > 0.0)) throw ContractError("EkfTracker::step: timestamps must strictly increase");
  state_.timestep = dt;
  last_time_ = input.timestamp;

  TrackStep out;
  state_ = predict(state_, input.velocity, noise_);
  if (!input.predict_only) {
    for (std::size_t i = 0; i < input.landmarks.size(); ++i) {
      try {
        UpdateResult u = update(state_, input.ranges[i], input.landmarks[i].position, noise_);
        state_ = u.state;
        out.innovations.push_back(u.innovation);
      } catch (const SingularGeometryError&) {
        out.failed = true;
      }
    }
  }
  out.state = state_;
  return out;
}

std::vector<TrackStep> track(std::span<const double> timestamps, std::span<const Vec2> smoothed,
                             std::span<const Vec2> raw, int landmark_window,
                             const NoiseConfig& noise) {
  if (timestamps.size() != smoothed.size() || raw.size() != smoothed.size()) {
    throw ContractError("track: input sequences differ in length");
  }
  if (smoothed.size() < 2) throw ContractError("track: need at least two fixes");
  if (landmark_window < 1) throw ContractError("track: landmark window must be >= 1");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw ContractError("track: timestamps must strictly increase");
    }
  }

  EkfTracker ekf(noise);
  ekf.initialize(smoothed[0], timestamps[0]);
  std::vector<TrackStep> out;
  out.reserve(smoothed.size());
  out.push_back(TrackStep{ekf.state(), {}, false});
  for (std::size_t k = 1; k < smoothed.size(); ++k) {
    TrackInput in;
    in.timestamp = timestamps[k];
    in.velocity = derive_velocity(smoothed[k - 1], timestamps[k - 1], smoothed[k], timestamps[k]);
    const std::size_t first = k > static_cast<std::size_t>(landmark_window)
                                  ? k - static_cast<std::size_t>(landmark_window)
                                  : 0;
    for (std::size_t j = first; j < k; ++j) {
      in.landmarks.push_back(Landmark{smoothed[j], static_cast<int>(j)});
      in.ranges.push_back(range_measurement(raw[k], smoothed[j]));
    }
    out.push_back(ekf.step(in));
  }
  return out;
}

}  // namespace rps
