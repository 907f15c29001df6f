// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Online relative-positioning pipeline: sweeps -> windowed band means ->
// ranges -> least-squares fix -> moving average -> EKF -> relative trajectory.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rps/anchor_survey.hpp"
#include "rps/config.hpp"
#include "rps/ekf.hpp"
#include "rps/multilateration.hpp"
#include "rps/pathloss.hpp"
#include "rps/pipeline_velocity.hpp"
#include "rps/smoothing.hpp"
#include "rps/sweep.hpp"

namespace rps {

/// Per-record status bits written to the `flags` column.
enum TrajectoryFlag : std::uint32_t {
  kFlagHeldFix = 1u << 0,            // degenerate geometry, previous fix repeated
  kFlagEkfStepFailed = 1u << 1,      // a landmark coincided with the state
  kFlagWarmup = 1u << 2,             // smoother window not yet full
  kFlagUncalibratedFrame = 1u << 3,  // anchors are the seeded placement, not surveyed
  kFlagMissingBand = 1u << 4,        // a selected band was absent from this sweep
};

struct BoundingBox {
  Vec2 min{-1000.0, -1000.0};
  Vec2 max{1000.0, 1000.0};
  double diagonal() const { return (max - min).norm(); }
  void validate() const;
};

/// How anchor coordinates are obtained.
///  seeded:     uniform random placement in the bounding box.
///  calibrated: the seeded placement fixes orientation only; the geometry is
///              surveyed from the first sweeps of the run (see anchor_survey.hpp).
///  given:      coordinates supplied by the user, matched to bands by frequency.
enum class AnchorMode { seeded, calibrated, given };

struct GivenAnchor {
  double freq_mhz = 0.0;
  Vec2 position = Vec2::Zero();
};

struct CalibrationConfig {
  /// Sweeps buffered before the first survey attempt; 0 surveys the whole
  /// stream when it ends (nothing is emitted before finish()).
  int min_sweeps = 0;
  /// Attempts repeat every `min_sweeps` more sweeps up to this many; then the
  /// seeded placement is used and records carry kFlagUncalibratedFrame.
  int max_sweeps = 360;
  SurveyOptions survey;
};

struct RpsConfig {
  BandPlan plan = BandPlan::uniform(1.0, 6000.0, 6);
  PathLossParams path_loss;
  SmootherConfig smoother;
  NoiseConfig noise;
  bool ekf_enabled = true;
  /// N_F: sweeps averaged into each band mean.
  int window_sweeps = 10;
  /// Sweeps observed before the transmit bands are chosen.
  int selection_sweeps = 10;
  std::uint64_t anchor_seed = 1;
  BoundingBox bbox;
  AnchorMode anchor_mode = AnchorMode::calibrated;
  std::vector<GivenAnchor> given_anchors;
  CalibrationConfig calibration;

  void validate() const;
};

/// Config from a key-value file. Unknown keys and bad values -> ConfigError.
RpsConfig load_rps_config(const KeyValueFile& file);

struct TrajectoryRecord {
  std::int64_t k = 0;
  Timestamp timestamp;
  Vec2 raw = Vec2::Zero();
  Vec2 wma = Vec2::Zero();
  Vec2 ekf = Vec2::Zero();
  double residual = 0.0;
  std::uint32_t flags = 0;
  /// Filter covariance after the step (not written to CSV).
  Mat2 covariance = Mat2::Zero();
};

struct PipelineDiagnostics {
  std::size_t sweeps_seen = 0;
  std::size_t sweeps_before_first_fix = 0;
  std::size_t held_fixes = 0;
  std::size_t ekf_failures = 0;
  std::vector<BandId> selected_bands;
  std::vector<Vec2> anchors;
  bool frame_calibrated = false;
  std::optional<SurveyResult> survey;
  std::vector<std::string> messages;
};

struct RelativeTrajectory {
  std::vector<TrajectoryRecord> records;
  PipelineDiagnostics diagnostics;
};

/// Seeded uniform placement, one anchor per band, no pair closer than 1% of
/// the box diagonal. 1000 failed draws -> PlacementError.
std::vector<Anchor> assign_anchor_frame(std::span<const BandId> band_ids, std::uint64_t seed,
                                        const BoundingBox& bbox);

/// Sweep-at-a-time processing. Records are emitted as soon as they are final;
/// in calibrated mode the first `calibration.min_sweeps` sweeps are held back
/// until the survey has run. `finish()` flushes whatever is still buffered.
class RpsPipeline {
 public:
  explicit RpsPipeline(RpsConfig config);

  /// Timestamps must strictly increase -> ContractError otherwise.
  std::vector<TrajectoryRecord> push(SweepRecord sweep);
  std::vector<TrajectoryRecord> finish();

  const PipelineDiagnostics& diagnostics() const noexcept { return diag_; }
  const RpsConfig& config() const noexcept { return config_; }

 private:
  enum class Phase { selecting, surveying, tracking, failed, finished };

  void select_bands();
  bool try_survey(bool final_attempt);
  void use_seeded_frame(const std::string& reason);
  void process(const SweepRecord& sweep, std::vector<TrajectoryRecord>& out);
  void drain(std::vector<TrajectoryRecord>& out);

  RpsConfig config_;
  Phase phase_ = Phase::selecting;
  std::vector<SweepRecord> buffer_;
  std::optional<Timestamp> last_time_;
  std::vector<BandId> bands_;
  std::vector<double> band_freqs_;
  std::vector<Anchor> anchors_;
  std::vector<Vec2> seed_layout_;
  SweepWindow window_;
  MovingAverage smoother_;
  EkfTracker ekf_;
  std::optional<Vec2> origin_;
  std::optional<Vec2> last_raw_;
  std::deque<Vec2> recent_smoothed_;
  std::optional<Timestamp> t0_;
  double last_t_ = 0.0;
  std::size_t accepted_ = 0;
  std::int64_t next_k_ = 0;
  std::uint32_t frame_flags_ = 0;
  PipelineDiagnostics diag_;
};

RelativeTrajectory run_rps(std::span<const SweepRecord> sweeps, const RpsConfig& config);
/// Streams straight from a reader; never materializes the sweep list.
RelativeTrajectory run_rps(SweepReader& reader, const RpsConfig& config);

struct SegmentError {
  double estimated_m = 0.0;
  double truth_m = 0.0;
  double percent = 0.0;
};

/// Straight-line distance between the fixes at consecutive waypoint indices,
/// against the true segment length. Needs indices.size() == truth.size() + 1,
/// indices ordered and within `positions`; truth lengths > 0.
std::vector<SegmentError> segment_error_report(std::span<const Vec2> positions,
                                               std::span<const std::size_t> waypoint_indices,
                                               std::span<const double> truth_lengths_m);

/// CSV writer for the trajectory format (header, 6 fractional digits, LF).
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records);

}  // namespace rps
