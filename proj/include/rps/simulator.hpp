// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic worlds: transmitters, a piecewise-linear vehicle route, and RSS
// sweeps drawn from the log-distance model with log-normal shadowing.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "rps/config.hpp"
#include "rps/pathloss.hpp"
#include "rps/pipeline.hpp"
#include "rps/sweep.hpp"

namespace rps {

struct Transmitter {
  Vec2 position = Vec2::Zero();
  double tx_power_dbm = 43.0;
  double fc_mhz = 900.0;
};

enum class SpectrumMode {
  sparse,  // only the transmitter bands
  full,    // every band of the plan up to spectrum_max_mhz, noise floor elsewhere
};

struct Scenario {
  std::vector<Transmitter> transmitters;
  std::vector<Vec2> waypoints;
  double speed_mps = 10.0;
  double cadence_s = 1.0;
  /// Pause at the first waypoint, and at every later one.
  double start_dwell_s = 0.0;
  double dwell_s = 0.0;
  PathLossParams path_loss;
  std::uint64_t seed = 1;
  Timestamp start_time{1'714'564'800'000'000};  // 2024-05-01 12:00:00 UTC
  SpectrumMode spectrum = SpectrumMode::sparse;
  double band_width_mhz = 1.0;
  double spectrum_max_mhz = 3500.0;
  double noise_floor_dbm = -110.0;
  double noise_floor_sigma_db = 2.0;

  /// >= 4 transmitters, >= 2 waypoints, positive speed/cadence, one
  /// transmitter per band. Violations -> ConfigError.
  void validate() const;
  /// Uniform plan matching the simulator's band layout.
  BandPlan band_plan(int selection_count) const;
};

/// Scenario file: `waypoint = x, y` and `transmitter = x, y, tx_dbm, fc_mhz`
/// (repeated, in order) plus scalar keys. Unknown keys -> ConfigError.
Scenario load_scenario(const KeyValueFile& file);

struct TruthSample {
  std::int64_t k = 0;
  Timestamp timestamp;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

struct GroundTruth {
  std::vector<TruthSample> samples;
  /// Sample at each waypoint; with a dwell, the last sample before departure.
  std::vector<std::size_t> waypoint_indices;
  /// Straight-line lengths between consecutive waypoints.
  std::vector<double> segment_lengths_m;
};

/// Samples every cadence along the polyline at constant speed; the end point is
/// always included. Zero-length route -> ContractError.
GroundTruth synth_route(const Scenario& scenario);

/// One sweep at a truth sample. Receivers closer than d0 are clamped to d0 and
/// counted in `clamped`.
SweepRecord synth_sweep(const TruthSample& sample, const Scenario& scenario, std::mt19937_64& rng,
                        std::size_t* clamped = nullptr);

struct SimulationRun {
  GroundTruth truth;
  std::vector<SweepRecord> sweeps;
  std::size_t clamped = 0;
};

SimulationRun simulate_run(const Scenario& scenario);

struct EstimatorScore {
  std::vector<SegmentError> segments;
  /// After the best rigid alignment onto the truth (the frame is relative).
  double rmse_m = 0.0;
};

struct RunScore {
  EstimatorScore raw, wma, ekf;
  std::size_t matched = 0;
};

/// Matches trajectory records to truth samples by timestamp. A waypoint with no
/// record, or a record with no truth sample -> ContractError.
RunScore score_run(const GroundTruth& truth, std::span<const TrajectoryRecord> trajectory);

/// Root-mean-square distance of the last `count` points from their centroid.
double coordinate_spread(std::span<const Vec2> points, std::size_t count = 10);

struct ConvergencePoint {
  double x = 0.0;  // spectrum fraction, or N_F
  double spread_m = 0.0;
  std::size_t fixes = 0;
};

/// Spread of the raw fixes when only bands below each cutoff are kept
/// (cumulative subsets in frequency order), cutoffs as fractions of the
/// highest band. Cutoffs leaving fewer than the needed bands give NaN spread.
std::vector<ConvergencePoint> spectrum_convergence(std::span<const SweepRecord> sweeps,
                                                   const RpsConfig& config,
                                                   std::span<const double> fractions);

/// Spread of the raw fixes for each sweep-window length N_F.
std::vector<ConvergencePoint> window_convergence(std::span<const SweepRecord> sweeps,
                                                 const RpsConfig& config,
                                                 std::span<const int> windows);

void write_truth_csv(std::ostream& out, const GroundTruth& truth);
/// One `index` per line (header `waypoint,k`).
void write_waypoints_csv(std::ostream& out, std::span<const std::size_t> indices);
/// Parses a waypoints file written by write_waypoints_csv (or plain indices).
std::vector<std::size_t> read_waypoints_csv(std::istream& in);
/// Parses truth.csv; waypoint_indices and segment lengths are left empty.
GroundTruth read_truth_csv(std::istream& in);
/// Parses a trajectory CSV written by write_trajectory_csv.
std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in);
/// Exact inverse of format_timestamp_seconds. Malformed -> ParseError.
Timestamp parse_timestamp_seconds(std::string_view text, std::size_t line = 0);

}  // namespace rps
