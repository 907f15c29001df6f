// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <string_view>

#include "rps/error.hpp"

namespace rps {

Vec2 derive_velocity(const Vec2& p0, double t0, const Vec2& p1, double t1) {
  const double dt = t1 - t0;
  if (!(dt > 0.0)) throw ContractError("derive_velocity: time step must be positive");
  return Vec2((p1.x() - p0.x()) / dt, (p1.y() - p0.y()) / dt);
}

void BoundingBox::validate() const {
  if (!min.allFinite() || !max.allFinite() || !(max.x() > min.x()) || !(max.y() > min.y())) {
    throw ConfigError("anchor bounding box must have positive width and height");
  }
}

void RpsConfig::validate() const {
  path_loss.validate();
  smoother.validate();
  noise.validate();
  bbox.validate();
  if (plan.selection_count() < BandPlan::kMinSelection) {
    throw ConfigError("at least 4 transmit bands are required");
  }
  if (window_sweeps < 1) throw ConfigError("window.sweeps must be >= 1");
  if (selection_sweeps < 1) throw ConfigError("selection.sweeps must be >= 1");
  if (calibration.min_sweeps != 0 && calibration.min_sweeps < 3) {
    throw ConfigError("calibration.min_sweeps must be 0 (whole stream) or >= 3");
  }
  if (calibration.min_sweeps != 0 && calibration.max_sweeps < calibration.min_sweeps) {
    throw ConfigError("calibration.max_sweeps must be >= calibration.min_sweeps");
  }
  if (anchor_mode == AnchorMode::given &&
      given_anchors.size() < static_cast<std::size_t>(plan.selection_count())) {
    throw ConfigError("anchors.mode = given needs one 'anchor' entry per transmit band");
  }
  if (calibration.survey.starts < 1) throw ConfigError("calibration.starts must be >= 1");
  if (!(calibration.survey.log_range_sigma > 0.0)) {
    throw ConfigError("calibration.log_range_sigma must be > 0");
  }
}

namespace {

constexpr std::array<std::string_view, 32> kConfigKeys = {
    "anchor",
    "band.width_mhz",
    "band.max_mhz",
    "band",
    "tx_count",
    "n_pl",
    "d0_m",
    "tx_power_dbm",
    "shadowing_sigma_db",
    "smoother.kind",
    "smoother.window",
    "smoother.weights",
    "ekf.q_diag",
    "ekf.r",
    "ekf.p0",
    "ekf.enabled",
    "window.sweeps",
    "selection.sweeps",
    "anchors.mode",
    "anchors.seed",
    "anchors.bbox",
    "calibration.min_sweeps",
    "calibration.max_sweeps",
    "calibration.starts",
    "calibration.max_iterations",
    "calibration.smoothness_sigma_m",
    "calibration.log_range_sigma",
    "calibration.min_extent_m",
    "calibration.max_sigma_fraction",
    "condition_cap",
    "comment",
    "name",
};

int to_int(long long v, std::string_view key) {
  if (v < 0 || v > 1'000'000'000) throw ConfigError("config key '" + std::string(key) + "' out of range");
  return static_cast<int>(v);
}

}  // namespace

RpsConfig load_rps_config(const KeyValueFile& file) {
  file.reject_unknown(kConfigKeys);
  RpsConfig cfg;
  const int tx_count = to_int(file.get_int("tx_count", 6), "tx_count");
  const auto explicit_bands = file.get_all("band");
  if (!explicit_bands.empty()) {
    std::vector<BandDef> defs;
    for (const auto& text : explicit_bands) {
      const auto v = parse_number_list(text);
      if (v.size() != 3) throw ConfigError("band entries are 'id, low_mhz, high_mhz'");
      defs.push_back(BandDef{static_cast<BandId>(v[0]), v[1], v[2]});
    }
    cfg.plan = BandPlan::explicit_ranges(std::move(defs), tx_count);
  } else {
    cfg.plan = BandPlan::uniform(file.get_double("band.width_mhz", 1.0),
                                 file.get_double("band.max_mhz", 6000.0), tx_count);
  }

  cfg.path_loss.n_pl = file.get_double("n_pl", cfg.path_loss.n_pl);
  cfg.path_loss.d0_m = file.get_double("d0_m", cfg.path_loss.d0_m);
  cfg.path_loss.tx_power_dbm = file.get_double("tx_power_dbm", cfg.path_loss.tx_power_dbm);
  cfg.path_loss.shadowing_sigma_db =
      file.get_double("shadowing_sigma_db", cfg.path_loss.shadowing_sigma_db);

  const std::string kind = file.get_string("smoother.kind", "wma");
  if (kind == "wma") {
    cfg.smoother.kind = SmootherKind::wma;
  } else if (kind == "sma") {
    cfg.smoother.kind = SmootherKind::sma;
  } else {
    throw ConfigError("smoother.kind must be 'wma' or 'sma', got '" + kind + "'");
  }
  cfg.smoother.window = to_int(file.get_int("smoother.window", cfg.smoother.window), "smoother.window");
  cfg.smoother.weights = file.get_doubles("smoother.weights", {});

  const auto q = file.get_doubles("ekf.q_diag", {cfg.noise.q(0, 0), cfg.noise.q(1, 1)});
  if (q.size() == 1) {
    cfg.noise.q = Mat2::Identity() * q[0];
  } else if (q.size() == 2) {
    cfg.noise.q = Mat2::Zero();
    cfg.noise.q(0, 0) = q[0];
    cfg.noise.q(1, 1) = q[1];
  } else {
    throw ConfigError("ekf.q_diag takes one or two values");
  }
  cfg.noise.r = file.get_double("ekf.r", cfg.noise.r);
  cfg.noise.p0 = file.get_double("ekf.p0", cfg.noise.p0);
  cfg.ekf_enabled = file.get_bool("ekf.enabled", cfg.ekf_enabled);

  cfg.window_sweeps = to_int(file.get_int("window.sweeps", cfg.window_sweeps), "window.sweeps");
  cfg.selection_sweeps =
      to_int(file.get_int("selection.sweeps", cfg.selection_sweeps), "selection.sweeps");

  const std::string mode = file.get_string("anchors.mode", "calibrated");
  if (mode == "calibrated") {
    cfg.anchor_mode = AnchorMode::calibrated;
  } else if (mode == "seeded") {
    cfg.anchor_mode = AnchorMode::seeded;
  } else if (mode == "given") {
    cfg.anchor_mode = AnchorMode::given;
  } else {
    throw ConfigError("anchors.mode must be 'calibrated', 'seeded' or 'given', got '" + mode + "'");
  }
  for (const auto& text : file.get_all("anchor")) {
    const auto v = parse_number_list(text);
    if (v.size() != 3) throw ConfigError("anchor entries are 'freq_mhz, x, y'");
    cfg.given_anchors.push_back(GivenAnchor{v[0], Vec2(v[1], v[2])});
  }
  const long long seed = file.get_int("anchors.seed", static_cast<long long>(cfg.anchor_seed));
  if (seed < 0) throw ConfigError("anchors.seed must be >= 0");
  cfg.anchor_seed = static_cast<std::uint64_t>(seed);
  const auto box = file.get_doubles("anchors.bbox", {cfg.bbox.min.x(), cfg.bbox.min.y(),
                                                     cfg.bbox.max.x(), cfg.bbox.max.y()});
  if (box.size() != 4) throw ConfigError("anchors.bbox is 'xmin, ymin, xmax, ymax'");
  cfg.bbox = BoundingBox{Vec2(box[0], box[1]), Vec2(box[2], box[3])};

  auto& cal = cfg.calibration;
  cal.min_sweeps = to_int(file.get_int("calibration.min_sweeps", cal.min_sweeps), "calibration.min_sweeps");
  cal.max_sweeps = to_int(file.get_int("calibration.max_sweeps", cal.max_sweeps), "calibration.max_sweeps");
  cal.survey.starts = to_int(file.get_int("calibration.starts", cal.survey.starts), "calibration.starts");
  cal.survey.max_iterations = to_int(
      file.get_int("calibration.max_iterations", cal.survey.max_iterations), "calibration.max_iterations");
  cal.survey.smoothness_sigma_m =
      file.get_double("calibration.smoothness_sigma_m", cal.survey.smoothness_sigma_m);
  cal.survey.log_range_sigma =
      file.get_double("calibration.log_range_sigma", cal.survey.log_range_sigma);
  cal.survey.min_track_extent_m =
      file.get_double("calibration.min_extent_m", cal.survey.min_track_extent_m);
  cal.survey.max_anchor_sigma_fraction =
      file.get_double("calibration.max_sigma_fraction", cal.survey.max_anchor_sigma_fraction);

  cfg.validate();
  return cfg;
}

std::vector<Anchor> assign_anchor_frame(std::span<const BandId> band_ids, std::uint64_t seed,
                                        const BoundingBox& bbox) {
  if (band_ids.size() < static_cast<std::size_t>(kMinAnchors)) {
    throw InsufficientAnchorsError("anchor frame needs at least 4 bands");
  }
  bbox.validate();
  const double min_sep = 0.01 * bbox.diagonal();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(bbox.min.x(), bbox.max.x());
  std::uniform_real_distribution<double> uy(bbox.min.y(), bbox.max.y());
  std::vector<Anchor> out;
  out.reserve(band_ids.size());
  int draws = 0;
  for (BandId id : band_ids) {
    while (true) {
      if (++draws > 1000) throw PlacementError("anchor placement failed after 1000 draws");
      const Vec2 p(ux(rng), uy(rng));
      const bool clear = std::all_of(out.begin(), out.end(), [&](const Anchor& a) {
        return (a.position - p).norm() >= min_sep;
      });
      if (clear) {
        out.push_back(Anchor{id, p});
        break;
      }
    }
  }
  return out;
}

RpsPipeline::RpsPipeline(RpsConfig config)
    : config_((config.validate(), std::move(config))),
      window_(static_cast<std::size_t>(config_.window_sweeps)),
      smoother_(config_.smoother),
      ekf_(config_.noise) {}

std::vector<TrajectoryRecord> RpsPipeline::push(SweepRecord sweep) {
  if (phase_ == Phase::finished) throw ContractError("push after finish");
  if (last_time_ && !(sweep.timestamp > *last_time_)) {
    throw ContractError("sweep timestamps must strictly increase");
  }
  last_time_ = sweep.timestamp;
  if (!t0_) t0_ = sweep.timestamp;
  ++diag_.sweeps_seen;

  std::vector<TrajectoryRecord> out;
  if (phase_ == Phase::failed) return out;
  if (phase_ == Phase::tracking) {
    process(sweep, out);
    return out;
  }
  buffer_.push_back(std::move(sweep));
  if (phase_ == Phase::selecting &&
      buffer_.size() >= static_cast<std::size_t>(config_.selection_sweeps)) {
    select_bands();
  }
  if (phase_ == Phase::surveying && config_.calibration.min_sweeps > 0) {
    const auto n = buffer_.size();
    const auto step = static_cast<std::size_t>(config_.calibration.min_sweeps);
    if (n >= step && n % step == 0) {
      try_survey(n >= static_cast<std::size_t>(config_.calibration.max_sweeps));
    }
  }
  if (phase_ == Phase::tracking) drain(out);
  return out;
}

std::vector<TrajectoryRecord> RpsPipeline::finish() {
  std::vector<TrajectoryRecord> out;
  if (phase_ == Phase::selecting && !buffer_.empty()) select_bands();
  if (phase_ == Phase::surveying) try_survey(true);
  if (phase_ == Phase::tracking) drain(out);
  buffer_.clear();
  phase_ = Phase::finished;
  return out;
}

void RpsPipeline::select_bands() {
  try {
    SweepWindow selection(buffer_.size());
    for (const auto& s : buffer_) selection.push(s);
    const auto stats = persistent_band_stats(selection);
    bands_ = select_transmit_bands(stats, config_.plan.selection_count());
    band_freqs_.clear();
    for (BandId id : bands_) {
      const auto def = config_.plan.band(id);
      band_freqs_.push_back(def ? def->center_mhz() : stats.front().center_freq_mhz);
    }
    anchors_ = assign_anchor_frame(bands_, config_.anchor_seed, config_.bbox);
  } catch (const Error& e) {
    diag_.messages.push_back(std::string("band selection failed: ") + e.what());
    buffer_.clear();
    phase_ = Phase::failed;
    return;
  }
  if (config_.anchor_mode == AnchorMode::given) {
    for (auto& a : anchors_) {
      const auto def = config_.plan.band(a.id);
      const auto it = std::find_if(
          config_.given_anchors.begin(), config_.given_anchors.end(), [&](const GivenAnchor& g) {
            const auto located = config_.plan.locate(g.freq_mhz);
            return located && def && located->id == def->id;
          });
      if (it == config_.given_anchors.end()) {
        throw ConfigError("no given anchor for selected band " + std::to_string(a.id));
      }
      a.position = it->position;
    }
    diag_.frame_calibrated = true;
  } else if (config_.anchor_mode == AnchorMode::seeded) {
    frame_flags_ |= kFlagUncalibratedFrame;
  }
  seed_layout_.clear();
  for (const auto& a : anchors_) seed_layout_.push_back(a.position);
  diag_.selected_bands = bands_;
  diag_.anchors = seed_layout_;
  phase_ = config_.anchor_mode == AnchorMode::calibrated ? Phase::surveying : Phase::tracking;
}

bool RpsPipeline::try_survey(bool final_attempt) {
  const std::size_t k = bands_.size();
  std::vector<double> ranges;
  std::size_t rows = 0;
  for (const auto& sweep : buffer_) {
    std::vector<double> row;
    for (std::size_t j = 0; j < k; ++j) {
      const auto* s = sweep.find(bands_[j]);
      if (s == nullptr) break;
      row.push_back(rss_to_distance(s->rss_dbm, band_freqs_[j], config_.path_loss));
    }
    if (row.size() != k) continue;
    ranges.insert(ranges.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows >= 3) {
    SurveyOptions opts = config_.calibration.survey;
    opts.seed = config_.anchor_seed;
    SurveyResult result = survey_anchors(ranges, rows, k, seed_layout_, opts);
    const bool ok = result.best_start >= 0 && result.observable;
    diag_.survey = result;
    if (ok) {
      for (std::size_t j = 0; j < k; ++j) anchors_[j].position = result.anchors[j];
      diag_.anchors = result.anchors;
      diag_.frame_calibrated = true;
      phase_ = Phase::tracking;
      return true;
    }
  }
  if (final_attempt) {
    use_seeded_frame("anchor survey not observable after " + std::to_string(rows) + " sweeps");
  }
  return false;
}

void RpsPipeline::use_seeded_frame(const std::string& reason) {
  diag_.messages.push_back(reason + "; using the seeded anchor placement");
  frame_flags_ |= kFlagUncalibratedFrame;
  phase_ = Phase::tracking;
}

void RpsPipeline::drain(std::vector<TrajectoryRecord>& out) {
  for (const auto& s : buffer_) process(s, out);
  buffer_.clear();
}

void RpsPipeline::process(const SweepRecord& sweep, std::vector<TrajectoryRecord>& out) {
  window_.push(sweep);
  std::uint32_t flags = frame_flags_;
  std::vector<double> distances(bands_.size());
  std::optional<PositionFix> fix;
  try {
    for (std::size_t j = 0; j < bands_.size(); ++j) {
      if (sweep.find(bands_[j]) == nullptr) flags |= kFlagMissingBand;
      const BandStats st = band_mean(window_, bands_[j]);
      distances[j] = rss_to_distance(st.theta_dbm, band_freqs_[j], config_.path_loss);
    }
    fix = fix_position(anchors_, distances, sweep.timestamp.seconds());
  } catch (const Error&) {
    fix.reset();
  }
  if (!fix) {
    if (!last_raw_) {
      ++diag_.sweeps_before_first_fix;
      return;
    }
    flags |= kFlagHeldFix;
    ++diag_.held_fixes;
  }
  const Vec2 absolute = fix ? fix->position : *last_raw_;
  last_raw_ = absolute;
  if (!origin_) origin_ = absolute;

  TrajectoryRecord rec;
  rec.k = next_k_++;
  rec.timestamp = sweep.timestamp;
  rec.raw = absolute - *origin_;
  rec.residual = fix ? fix->residual_norm : 0.0;
  rec.wma = smoother_.push(rec.raw);
  if (smoother_.history().size() < static_cast<std::size_t>(config_.smoother.window)) {
    flags |= kFlagWarmup;
  }

  const double t = static_cast<double>(sweep.timestamp.micros - t0_->micros) * 1e-6;
  if (config_.ekf_enabled) {
    if (!ekf_.initialized()) {
      ekf_.initialize(rec.wma, t);
    } else {
      TrackInput in;
      in.timestamp = t;
      in.velocity = derive_velocity(recent_smoothed_.back(), last_t_, rec.wma, t);
      in.predict_only = !fix.has_value();
      for (std::size_t j = 0; j < recent_smoothed_.size(); ++j) {
        in.landmarks.push_back(Landmark{recent_smoothed_[j], static_cast<int>(accepted_ - recent_smoothed_.size() + j)});
        in.ranges.push_back(range_measurement(rec.raw, recent_smoothed_[j]));
      }
      const TrackStep step = ekf_.step(in);
      if (step.failed) {
        flags |= kFlagEkfStepFailed;
        ++diag_.ekf_failures;
      }
    }
    rec.ekf = ekf_.state().position;
    rec.covariance = ekf_.state().covariance;
  } else {
    rec.ekf = rec.wma;
  }
  recent_smoothed_.push_back(rec.wma);
  while (recent_smoothed_.size() > static_cast<std::size_t>(config_.smoother.window)) {
    recent_smoothed_.pop_front();
  }
  last_t_ = t;
  ++accepted_;
  rec.flags = flags;
  out.push_back(rec);
}

RelativeTrajectory run_rps(std::span<const SweepRecord> sweeps, const RpsConfig& config) {
  RpsPipeline pipeline(config);
  RelativeTrajectory traj;
  for (const auto& s : sweeps) {
    auto recs = pipeline.push(s);
    traj.records.insert(traj.records.end(), recs.begin(), recs.end());
  }
  auto tail = pipeline.finish();
  traj.records.insert(traj.records.end(), tail.begin(), tail.end());
  traj.diagnostics = pipeline.diagnostics();
  return traj;
}

RelativeTrajectory run_rps(SweepReader& reader, const RpsConfig& config) {
  RpsPipeline pipeline(config);
  RelativeTrajectory traj;
  while (auto s = reader.next()) {
    auto recs = pipeline.push(std::move(*s));
    traj.records.insert(traj.records.end(), recs.begin(), recs.end());
  }
  auto tail = pipeline.finish();
  traj.records.insert(traj.records.end(), tail.begin(), tail.end());
  traj.diagnostics = pipeline.diagnostics();
  return traj;
}

std::vector<SegmentError> segment_error_report(std::span<const Vec2> positions,
                                               std::span<const std::size_t> waypoint_indices,
                                               std::span<const double> truth_lengths_m) {
  if (waypoint_indices.size() != truth_lengths_m.size() + 1) {
    throw ContractError("segment_error_report: need one more waypoint than segment");
  }
  for (std::size_t i = 0; i < waypoint_indices.size(); ++i) {
    if (waypoint_indices[i] >= positions.size()) {
      throw ContractError("segment_error_report: waypoint index out of range");
    }
    if (i > 0 && waypoint_indices[i] < waypoint_indices[i - 1]) {
      throw ContractError("segment_error_report: waypoint indices must be ordered");
    }
  }
  std::vector<SegmentError> out;
  for (std::size_t s = 0; s < truth_lengths_m.size(); ++s) {
    const double truth = truth_lengths_m[s];
    if (!(truth > 0.0)) throw ContractError("segment_error_report: truth lengths must be > 0");
    const double est =
        (positions[waypoint_indices[s + 1]] - positions[waypoint_indices[s]]).norm();
    out.push_back(SegmentError{est, truth, std::abs(est - truth) / truth * 100.0});
  }
  return out;
}

namespace {

void append_fixed(std::string& line, double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 6);
  std::string_view text(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
  if (text == "-0.000000") text = "0.000000";
  line.append(text);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records) {
  out << "k,timestamp,x_raw,y_raw,x_wma,y_wma,x_ekf,y_ekf,residual,flags\n";
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += std::to_string(r.k);
    line += ',';
    line += format_timestamp_seconds(r.timestamp);
    for (double v : {r.raw.x(), r.raw.y(), r.wma.x(), r.wma.y(), r.ekf.x(), r.ekf.y(), r.residual}) {
      line += ',';
      append_fixed(line, v);
    }
    line += ',';
    line += std::to_string(r.flags);
    line += '\n';
    out << line;
  }
}

}  // namespace rps
