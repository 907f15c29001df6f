// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "rps/anchor_survey.hpp"
#include "rps/error.hpp"

namespace rps {

namespace {

double route_length(std::span<const Vec2> waypoints) {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) total += (waypoints[i] - waypoints[i - 1]).norm();
  return total;
}

BandId band_of(double freq_mhz, double width) {
  return static_cast<BandId>(std::floor(freq_mhz / width));
}

}  // namespace

void Scenario::validate() const {
  if (transmitters.size() < 4) throw ConfigError("scenario needs at least 4 transmitters");
  if (waypoints.size() < 2) throw ConfigError("scenario needs at least 2 waypoints");
  if (!(speed_mps > 0.0)) throw ConfigError("speed must be > 0");
  if (!(cadence_s > 0.0)) throw ConfigError("cadence must be > 0");
  if (start_dwell_s < 0.0 || dwell_s < 0.0) throw ConfigError("dwell times must be >= 0");
  if (!(band_width_mhz > 0.0)) throw ConfigError("band width must be > 0");
  path_loss.validate();
  if (path_loss.shadowing_sigma_db < 0.0) throw ConfigError("shadowing sigma must be >= 0");
  std::set<BandId> used;
  for (const auto& t : transmitters) {
    if (!t.position.allFinite() || !std::isfinite(t.tx_power_dbm)) {
      throw ConfigError("transmitter values must be finite");
    }
    if (!(t.fc_mhz > 0.0) || t.fc_mhz >= spectrum_max_mhz) {
      throw ConfigError("transmitter frequency must lie in (0, spectrum_max_mhz)");
    }
    if (!used.insert(band_of(t.fc_mhz, band_width_mhz)).second) {
      throw ConfigError("two transmitters share one band");
    }
  }
}

BandPlan Scenario::band_plan(int selection_count) const {
  return BandPlan::uniform(band_width_mhz, spectrum_max_mhz, selection_count);
}

Scenario load_scenario(const KeyValueFile& file) {
  static constexpr std::array<std::string_view, 19> kKeys = {
      "waypoint",          "transmitter",  "speed_mps",         "cadence_s",
      "start_dwell_s",     "dwell_s",      "n_pl",              "d0_m",
      "tx_power_dbm",      "shadowing_sigma_db", "seed",        "start_time",
      "spectrum",          "band_width_mhz", "spectrum_max_mhz", "noise_floor_dbm",
      "noise_floor_sigma_db", "name",      "comment"};
  file.reject_unknown(kKeys);
  Scenario sc;
  for (const auto& text : file.get_all("waypoint")) {
    const auto v = parse_number_list(text);
    if (v.size() != 2) throw ConfigError("waypoint entries are 'x, y'");
    sc.waypoints.emplace_back(v[0], v[1]);
  }
  const double default_power = file.get_double("tx_power_dbm", 43.0);
  for (const auto& text : file.get_all("transmitter")) {
    const auto v = parse_number_list(text);
    if (v.size() == 3) {
      sc.transmitters.push_back(Transmitter{Vec2(v[0], v[1]), default_power, v[2]});
    } else if (v.size() == 4) {
      sc.transmitters.push_back(Transmitter{Vec2(v[0], v[1]), v[2], v[3]});
    } else {
      throw ConfigError("transmitter entries are 'x, y, [tx_dbm,] fc_mhz'");
    }
  }
  sc.speed_mps = file.get_double("speed_mps", sc.speed_mps);
  sc.cadence_s = file.get_double("cadence_s", sc.cadence_s);
  sc.start_dwell_s = file.get_double("start_dwell_s", sc.start_dwell_s);
  sc.dwell_s = file.get_double("dwell_s", sc.dwell_s);
  sc.path_loss.n_pl = file.get_double("n_pl", sc.path_loss.n_pl);
  sc.path_loss.d0_m = file.get_double("d0_m", sc.path_loss.d0_m);
  sc.path_loss.tx_power_dbm = default_power;
  sc.path_loss.shadowing_sigma_db =
      file.get_double("shadowing_sigma_db", sc.path_loss.shadowing_sigma_db);
  const long long seed = file.get_int("seed", 1);
  if (seed < 0) throw ConfigError("seed must be >= 0");
  sc.seed = static_cast<std::uint64_t>(seed);
  if (const auto st = file.get("start_time")) {
    const auto space = st->find(' ');
    if (space == std::string::npos) throw ConfigError("start_time is 'YYYY-MM-DD HH:MM:SS'");
    try {
      sc.start_time = parse_timestamp(st->substr(0, space), st->substr(space + 1));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("start_time: ") + e.what());
    }
  }
  const std::string spectrum = file.get_string("spectrum", "sparse");
  if (spectrum == "sparse") {
    sc.spectrum = SpectrumMode::sparse;
  } else if (spectrum == "full") {
    sc.spectrum = SpectrumMode::full;
  } else {
    throw ConfigError("spectrum must be 'sparse' or 'full'");
  }
  sc.band_width_mhz = file.get_double("band_width_mhz", sc.band_width_mhz);
  sc.spectrum_max_mhz = file.get_double("spectrum_max_mhz", sc.spectrum_max_mhz);
  sc.noise_floor_dbm = file.get_double("noise_floor_dbm", sc.noise_floor_dbm);
  sc.noise_floor_sigma_db = file.get_double("noise_floor_sigma_db", sc.noise_floor_sigma_db);
  sc.validate();
  return sc;
}

GroundTruth synth_route(const Scenario& scenario) {
  scenario.validate();
  const double length = route_length(scenario.waypoints);
  if (!(length > 0.0)) throw ContractError("synth_route: zero-length route");

  // Timeline of (time, position) knots: dwell then travel, per waypoint.
  struct Knot {
    double t;
    Vec2 p;
  };
  std::vector<Knot> knots;
  std::vector<double> depart;  // departure time at each waypoint
  double t = 0.0;
  for (std::size_t i = 0; i < scenario.waypoints.size(); ++i) {
    const Vec2& w = scenario.waypoints[i];
    if (i > 0) t += (w - scenario.waypoints[i - 1]).norm() / scenario.speed_mps;
    knots.push_back({t, w});
    t += i == 0 ? scenario.start_dwell_s : scenario.dwell_s;
    knots.push_back({t, w});
    depart.push_back(t);
  }
  const double end_time = t;

  auto locate = [&](double time, Vec2& pos, Vec2& vel) {
    auto it = std::upper_bound(knots.begin(), knots.end(), time,
                               [](double v, const Knot& k) { return v < k.t; });
    if (it == knots.begin()) {
      pos = knots.front().p;
      vel = Vec2::Zero();
      return;
    }
    if (it == knots.end()) {
      pos = knots.back().p;
      vel = Vec2::Zero();
      return;
    }
    const Knot& a = *(it - 1);
    const Knot& b = *it;
    const double span = b.t - a.t;
    const double f = span > 0.0 ? (time - a.t) / span : 0.0;
    pos = a.p + f * (b.p - a.p);
    vel = span > 0.0 ? Vec2((b.p - a.p) / span) : Vec2::Zero();
  };

  GroundTruth truth;
  const auto whole = static_cast<std::int64_t>(std::floor(end_time / scenario.cadence_s + 1e-9));
  std::vector<double> times;
  for (std::int64_t k = 0; k <= whole; ++k) times.push_back(static_cast<double>(k) * scenario.cadence_s);
  if (end_time - times.back() > 1e-9 * std::max(1.0, end_time)) times.push_back(end_time);
  for (std::size_t k = 0; k < times.size(); ++k) {
    TruthSample s;
    s.k = static_cast<std::int64_t>(k);
    s.timestamp = Timestamp{scenario.start_time.micros + std::llround(times[k] * 1e6)};
    locate(times[k], s.position, s.velocity);
    truth.samples.push_back(s);
  }
  // Last sample at or before departure; the final waypoint is the last sample.
  for (std::size_t i = 0; i < scenario.waypoints.size(); ++i) {
    const double target = i + 1 == scenario.waypoints.size() ? end_time : depart[i];
    auto it = std::upper_bound(times.begin(), times.end(), target + 1e-9);
    truth.waypoint_indices.push_back(static_cast<std::size_t>(it - times.begin()) - 1);
    if (i > 0) truth.segment_lengths_m.push_back((scenario.waypoints[i] - scenario.waypoints[i - 1]).norm());
  }
  return truth;
}

SweepRecord synth_sweep(const TruthSample& sample, const Scenario& scenario, std::mt19937_64& rng,
                        std::size_t* clamped) {
  std::normal_distribution<double> shadow(0.0, 1.0);
  const double width = scenario.band_width_mhz;
  std::map<BandId, double> tx_rss;
  for (const auto& tx : scenario.transmitters) {
    double d = (sample.position - tx.position).norm();
    if (d < scenario.path_loss.d0_m) {
      d = scenario.path_loss.d0_m;
      if (clamped != nullptr) ++*clamped;
    }
    const BandId id = band_of(tx.fc_mhz, width);
    const double fc = (static_cast<double>(id) + 0.5) * width;
    PathLossParams pl = scenario.path_loss;
    pl.tx_power_dbm = tx.tx_power_dbm;
    double rss = rss_at_distance(d, fc, pl);
    if (scenario.path_loss.shadowing_sigma_db > 0.0) {
      rss += scenario.path_loss.shadowing_sigma_db * shadow(rng);
    }
    tx_rss[id] = rss;
  }
  SweepRecord rec;
  rec.timestamp = sample.timestamp;
  if (scenario.spectrum == SpectrumMode::sparse) {
    for (const auto& [id, rss] : tx_rss) {
      rec.bands.push_back(BandSample{id, (static_cast<double>(id) + 0.5) * width, rss});
    }
    return rec;
  }
  const auto count = static_cast<BandId>(std::floor(scenario.spectrum_max_mhz / width + 1e-9));
  rec.bands.reserve(static_cast<std::size_t>(count));
  for (BandId id = 0; id < count; ++id) {
    const auto it = tx_rss.find(id);
    double rss = 0.0;
    if (it != tx_rss.end()) {
      rss = it->second;
    } else {
      rss = scenario.noise_floor_dbm + scenario.noise_floor_sigma_db * shadow(rng);
    }
    rec.bands.push_back(BandSample{id, (static_cast<double>(id) + 0.5) * width, rss});
  }
  return rec;
}

SimulationRun simulate_run(const Scenario& scenario) {
  SimulationRun run;
  run.truth = synth_route(scenario);
  std::mt19937_64 rng(scenario.seed);
  run.sweeps.reserve(run.truth.samples.size());
  for (const auto& s : run.truth.samples) run.sweeps.push_back(synth_sweep(s, scenario, rng, &run.clamped));
  return run;
}

namespace {

EstimatorScore score_estimator(std::span<const Vec2> est, std::span<const Vec2> truth,
                               std::span<const std::size_t> waypoints,
                               std::span<const double> lengths) {
  EstimatorScore s;
  s.segments = segment_error_report(est, waypoints, lengths);
  const RigidTransform tf = fit_rigid(est, truth);
  double ss = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) ss += (tf.apply(est[i]) - truth[i]).squaredNorm();
  s.rmse_m = std::sqrt(ss / static_cast<double>(est.size()));
  return s;
}

}  // namespace

RunScore score_run(const GroundTruth& truth, std::span<const TrajectoryRecord> trajectory) {
  std::map<std::int64_t, std::size_t> by_time;
  for (std::size_t i = 0; i < trajectory.size(); ++i) by_time[trajectory[i].timestamp.micros] = i;
  std::map<std::int64_t, std::size_t> truth_by_time;
  for (std::size_t i = 0; i < truth.samples.size(); ++i) {
    truth_by_time[truth.samples[i].timestamp.micros] = i;
  }
  std::vector<Vec2> raw, wma, ekf, ref;
  std::map<std::size_t, std::size_t> truth_to_matched;
  for (const auto& rec : trajectory) {
    const auto it = truth_by_time.find(rec.timestamp.micros);
    if (it == truth_by_time.end()) throw ContractError("score_run: trajectory record without truth sample");
    truth_to_matched[it->second] = raw.size();
    raw.push_back(rec.raw);
    wma.push_back(rec.wma);
    ekf.push_back(rec.ekf);
    ref.push_back(truth.samples[it->second].position);
  }
  if (raw.empty()) throw ContractError("score_run: empty trajectory");
  std::vector<std::size_t> indices;
  std::vector<double> lengths;
  for (std::size_t w = 0; w < truth.waypoint_indices.size(); ++w) {
    const std::size_t ti = truth.waypoint_indices[w];
    if (ti >= truth.samples.size()) throw ContractError("score_run: waypoint index out of range");
    const auto it = truth_to_matched.find(ti);
    if (it == truth_to_matched.end()) throw ContractError("score_run: waypoint has no trajectory record");
    indices.push_back(it->second);
    if (w > 0) {
      const std::size_t prev = truth.waypoint_indices[w - 1];
      lengths.push_back((truth.samples[ti].position - truth.samples[prev].position).norm());
    }
  }
  RunScore score;
  score.matched = raw.size();
  score.raw = score_estimator(raw, ref, indices, lengths);
  score.wma = score_estimator(wma, ref, indices, lengths);
  score.ekf = score_estimator(ekf, ref, indices, lengths);
  return score;
}

double coordinate_spread(std::span<const Vec2> points, std::size_t count) {
  if (points.empty() || count == 0) throw ContractError("coordinate_spread: no points");
  const std::size_t n = std::min(count, points.size());
  const auto tail = points.subspan(points.size() - n);
  Vec2 c = Vec2::Zero();
  for (const auto& p : tail) c += p;
  c /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& p : tail) ss += (p - c).squaredNorm();
  return std::sqrt(ss / static_cast<double>(n));
}

namespace {

ConvergencePoint spread_point(double x, std::span<const SweepRecord> sweeps, const RpsConfig& config) {
  ConvergencePoint pt{x, std::numeric_limits<double>::quiet_NaN(), 0};
  const RelativeTrajectory traj = run_rps(sweeps, config);
  std::vector<Vec2> raw;
  for (const auto& r : traj.records) {
    if ((r.flags & kFlagHeldFix) == 0) raw.push_back(r.raw);
  }
  pt.fixes = raw.size();
  if (!raw.empty()) pt.spread_m = coordinate_spread(raw, 10);
  return pt;
}

}  // namespace

std::vector<ConvergencePoint> spectrum_convergence(std::span<const SweepRecord> sweeps,
                                                   const RpsConfig& config,
                                                   std::span<const double> fractions) {
  double top = 0.0;
  for (const auto& s : sweeps) {
    for (const auto& b : s.bands) top = std::max(top, b.center_freq_mhz);
  }
  std::vector<ConvergencePoint> out;
  for (double f : fractions) {
    const double cutoff = f * top;
    std::vector<SweepRecord> subset(sweeps.begin(), sweeps.end());
    for (auto& s : subset) {
      std::erase_if(s.bands, [&](const BandSample& b) { return b.center_freq_mhz > cutoff; });
    }
    // A narrower spectrum offers fewer anchors; use what is left, down to the minimum.
    RpsConfig cfg = config;
    const int available = subset.empty() ? 0 : static_cast<int>(subset.front().bands.size());
    const int k = std::max(BandPlan::kMinSelection, std::min(config.plan.selection_count(), available));
    if (k != config.plan.selection_count()) cfg.plan = config.plan.with_selection_count(k);
    out.push_back(spread_point(f, subset, cfg));
  }
  return out;
}

std::vector<ConvergencePoint> window_convergence(std::span<const SweepRecord> sweeps,
                                                 const RpsConfig& config,
                                                 std::span<const int> windows) {
  std::vector<ConvergencePoint> out;
  for (int w : windows) {
    RpsConfig cfg = config;
    cfg.window_sweeps = w;
    out.push_back(spread_point(static_cast<double>(w), sweeps, cfg));
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

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view f, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size()) {
    throw ParseError("bad field '" + std::string(f) + "'", line);
  }
  return v;
}

}  // namespace

Timestamp parse_timestamp_seconds(std::string_view text, std::size_t line) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::string frac = dot == std::string_view::npos ? std::string() : std::string(text.substr(dot + 1));
  if (whole.empty() || frac.size() > 6) throw ParseError("bad timestamp '" + std::string(text) + "'", line);
  frac.append(6 - frac.size(), '0');
  const auto secs = parse_field<std::int64_t>(whole, line);
  const auto micros = parse_field<std::int64_t>(frac, line);
  const std::int64_t total = secs * 1'000'000 + micros;
  return Timestamp{negative ? -total : total};
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "k,timestamp,x,y\n";
  std::string line;
  for (const auto& s : truth.samples) {
    line = std::to_string(s.k) + "," + format_timestamp_seconds(s.timestamp);
    line += ',';
    append_fixed(line, s.position.x());
    line += ',';
    append_fixed(line, s.position.y());
    line += '\n';
    out << line;
  }
}

void write_waypoints_csv(std::ostream& out, std::span<const std::size_t> indices) {
  out << "waypoint,k\n";
  for (std::size_t i = 0; i < indices.size(); ++i) out << i << ',' << indices[i] << '\n';
}

std::vector<std::size_t> read_waypoints_csv(std::istream& in) {
  std::vector<std::size_t> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto fields = split(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (number == 1 && !fields.empty() && !fields.back().empty() &&
        (std::isalpha(static_cast<unsigned char>(fields.back().front())) != 0)) {
      continue;  // header
    }
    out.push_back(parse_field<std::size_t>(fields.back(), number));
  }
  return out;
}

GroundTruth read_truth_csv(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1) continue;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 4) throw ParseError("truth rows have 4 fields", number);
    TruthSample s;
    s.k = parse_field<std::int64_t>(f[0], number);
    s.timestamp = parse_timestamp_seconds(f[1], number);
    s.position = Vec2(parse_field<double>(f[2], number), parse_field<double>(f[3], number));
    truth.samples.push_back(s);
  }
  return truth;
}

std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1) continue;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 10) throw ParseError("trajectory rows have 10 fields", number);
    TrajectoryRecord r;
    r.k = parse_field<std::int64_t>(f[0], number);
    r.timestamp = parse_timestamp_seconds(f[1], number);
    r.raw = Vec2(parse_field<double>(f[2], number), parse_field<double>(f[3], number));
    r.wma = Vec2(parse_field<double>(f[4], number), parse_field<double>(f[5], number));
    r.ekf = Vec2(parse_field<double>(f[6], number), parse_field<double>(f[7], number));
    r.residual = parse_field<double>(f[8], number);
    r.flags = parse_field<std::uint32_t>(f[9], number);
    out.push_back(r);
  }
  return out;
}

}  // namespace rps
