// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cli.hpp"
#include "rps/anchor_survey.hpp"
#include "rps/ekf.hpp"
#include "rps/error.hpp"
#include "rps/multilateration.hpp"
#include "rps/pathloss.hpp"
#include "rps/pipeline.hpp"
#include "rps/simulator.hpp"
#include "rps/smoothing.hpp"

using namespace rps;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

fs::path source_path(const std::string& rel) { return fs::path(RPS_SOURCE_DIR) / rel; }

Scenario replica_scenario() {
  return load_scenario(KeyValueFile::load(source_path("data/route_replica.scenario")));
}

RpsConfig replica_config() {
  return load_rps_config(KeyValueFile::load(source_path("configs/route_replica.conf")));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return NAN;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s (%.2f s) -- %s\n", o.pass ? "PASS" : "FAIL", id, title, seconds_since(t0),
              o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Shared between criteria 4 and 5: every replica run of the Monte-Carlo batch.
struct ReplicaRun {
  SimulationRun sim;
  RelativeTrajectory traj;
};
std::vector<ReplicaRun> replica_runs;

Outcome multilateration_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  std::uniform_int_distribution<int> count(4, 8);
  double worst = 0.0;
  int done = 0;
  while (done < 1000) {
    std::vector<Anchor> anchors;
    const int k = count(rng);
    for (int i = 0; i < k; ++i) anchors.push_back({i, Vec2(u(rng), u(rng))});
    const Vec2 p(u(rng), u(rng));
    std::vector<double> d;
    for (const auto& a : anchors) d.push_back((a.position - p).norm());
    PositionFix fix;
    try {
      fix = fix_position(anchors, d, 0.0);
    } catch (const DegenerateGeometryError&) {
      continue;  // near-collinear draw; not part of the population
    }
    worst = std::max(worst, (fix.position - p).norm());
    ++done;
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-6 && elapsed < 5.0,
          fmt("max error %.3e m over 1000 geometries (< 1e-6), %.3f s (< 5 s)", worst, elapsed)};
}

Outcome pathloss_round_trip() {
  PathLossParams p;
  double worst = 0.0;
  std::size_t n = 0;
  for (double npl : {2.7, 2.8, 3.5}) {
    p.n_pl = npl;
    for (int i = 0; i <= 5000; ++i) {
      const double d = std::pow(10.0, 5.0 * i / 5000.0);
      for (double fc : {100.0, 900.5, 2100.5, 3499.5}) {
        const double back = rss_to_distance(rss_at_distance(d, fc, p), fc, p);
        worst = std::max(worst, std::abs(back - d) / d);
        ++n;
      }
    }
  }
  return {worst < 1e-9, fmt("max relative error %.3e over %.0f samples, d in [1, 1e5] m (< 1e-9)", worst,
                            static_cast<double>(n))};
}

Outcome error_metric_fidelity() {
  struct Cell {
    double est, truth, expected;
  };
  const Cell cells[] = {{248, 270, 8.15}, {567, 490, 15.71}, {279, 260, 7.31}, {787, 840, 6.31},
                        {500, 490, 2.04}, {290, 260, 11.54}, {800, 840, 4.76}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cells) {
    const std::vector<Vec2> pts = {Vec2(0, 0), Vec2(c.est, 0)};
    const std::vector<std::size_t> idx = {0, 1};
    const std::vector<double> truth = {c.truth};
    const double pct = segment_error_report(pts, idx, truth)[0].percent;
    const double rounded = std::round(pct * 100.0) / 100.0;
    ok = ok && rounded == c.expected;
    detail += fmt("%.0f/%.0f->%.2f ", c.est, c.truth, rounded);
  }
  const std::vector<Vec2> pts = {Vec2(0, 0), Vec2(263, 0)};
  const std::vector<std::size_t> idx = {0, 1};
  const std::vector<double> truth = {270};
  detail += fmt("(263/270 computes to %.2f, printed value 3.7 not used)",
                segment_error_report(pts, idx, truth)[0].percent);
  return {ok, detail};
}

Outcome route_replica() {
  const auto t0 = Clock::now();
  const Scenario base = replica_scenario();
  const RpsConfig cfg = replica_config();
  constexpr int kSeeds = 50;
  std::vector<std::vector<double>> wma(4), ekf(4);
  int calibrated = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    Scenario sc = base;
    sc.seed = static_cast<std::uint64_t>(seed);
    ReplicaRun run;
    run.sim = simulate_run(sc);
    run.traj = run_rps(run.sim.sweeps, cfg);
    if (run.traj.diagnostics.frame_calibrated) ++calibrated;
    const RunScore score = score_run(run.sim.truth, run.traj.records);
    for (std::size_t s = 0; s < 4; ++s) {
      wma[s].push_back(score.wma.segments[s].percent);
      ekf[s].push_back(score.ekf.segments[s].percent);
    }
    replica_runs.push_back(std::move(run));
  }
  const double elapsed = seconds_since(t0);
  bool wma_ok = true;
  int ekf_wins = 0;
  std::string detail = "segments AB/BC/CD/DE median % wma=";
  for (std::size_t s = 0; s < 4; ++s) {
    const double w = median(wma[s]);
    wma_ok = wma_ok && w <= 20.0;
    detail += fmt(s ? "/%.2f" : "%.2f", w);
  }
  detail += " ekf=";
  for (std::size_t s = 0; s < 4; ++s) {
    const double e = median(ekf[s]);
    if (e <= median(wma[s])) ++ekf_wins;
    detail += fmt(s ? "/%.2f" : "%.2f", e);
  }
  detail += std::string("; wma <= 20% on every segment: ") + (wma_ok ? "yes" : "no");
  detail += fmt("; ekf <= wma on %.0f/4 (need 3); surveyed frames %.0f/50; %.1f s (< 60 s)",
                static_cast<double>(ekf_wins), static_cast<double>(calibrated), elapsed);
  return {wma_ok && ekf_wins >= 3 && elapsed < 60.0, detail};
}

// Replays the filter of a finished run one predict/update at a time and checks
// the covariance after each, and that the replay reproduces the pipeline.
struct InvariantTally {
  std::size_t predicts = 0, updates = 0, violations = 0, mismatches = 0;
  double worst_asym = 0.0, worst_eig = INFINITY, worst_trace_rise = -INFINITY;
};

void check_cov(const Mat2& p, InvariantTally& t) {
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(0.5 * (p + p.transpose()), Eigen::EigenvaluesOnly);
  t.worst_asym = std::max(t.worst_asym, asym);
  t.worst_eig = std::min(t.worst_eig, eig.eigenvalues()(0));
  if (!(asym < 1e-9) || !(eig.eigenvalues()(0) > -1e-9)) ++t.violations;
}

void replay(const RelativeTrajectory& traj, const RpsConfig& cfg, InvariantTally& tally) {
  const auto& recs = traj.records;
  if (recs.empty()) return;
  const auto w = static_cast<std::size_t>(cfg.smoother.window);
  const std::int64_t t0 = recs.front().timestamp.micros;
  auto rel = [&](const TrajectoryRecord& r) { return static_cast<double>(r.timestamp.micros - t0) * 1e-6; };
  TrackState state;
  state.position = recs[0].wma;
  state.covariance = Mat2::Identity() * cfg.noise.p0;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    const double dt = rel(recs[k]) - rel(recs[k - 1]);
    state.timestep = dt;
    state = predict(state, derive_velocity(recs[k - 1].wma, rel(recs[k - 1]), recs[k].wma, rel(recs[k])), cfg.noise);
    ++tally.predicts;
    check_cov(state.covariance, tally);
    if ((recs[k].flags & kFlagHeldFix) == 0) {
      for (std::size_t j = k > w ? k - w : 0; j < k; ++j) {
        const double before = state.covariance.trace();
        try {
          state = update(state, range_measurement(recs[k].raw, recs[j].wma), recs[j].wma, cfg.noise).state;
        } catch (const SingularGeometryError&) {
          continue;
        }
        ++tally.updates;
        check_cov(state.covariance, tally);
        const double rise = state.covariance.trace() - before;
        tally.worst_trace_rise = std::max(tally.worst_trace_rise, rise);
        if (rise > 1e-12 * std::max(1.0, before)) ++tally.violations;
      }
    }
    if (std::memcmp(state.position.data(), recs[k].ekf.data(), sizeof(double) * 2) != 0) ++tally.mismatches;
  }
}

Outcome ekf_invariants() {
  const RpsConfig cfg = replica_config();
  InvariantTally tally;
  for (const auto& run : replica_runs) replay(run.traj, cfg, tally);

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  double worst_fd = 0.0;
  int pairs = 0;
  while (pairs < 1000) {
    const Vec2 x(u(rng), u(rng)), l(u(rng), u(rng));
    if ((x - l).norm() <= 0.1) continue;
    const auto j = range_jacobian(x, l);
    for (int axis = 0; axis < 2; ++axis) {
      Vec2 e = Vec2::Zero();
      e[axis] = 1e-6;
      const double fd = (range_measurement(x + e, l) - range_measurement(x - e, l)) / 2e-6;
      worst_fd = std::max(worst_fd, std::abs(fd - j(axis)));
    }
    ++pairs;
  }
  const bool ok = !replica_runs.empty() && tally.violations == 0 && tally.mismatches == 0 && worst_fd < 1e-6;
  return {ok, fmt("%.0f predicts, %.0f updates over the replica runs; ", static_cast<double>(tally.predicts),
                  static_cast<double>(tally.updates)) +
                  fmt("max |P-P^T| %.2e, min eig %.2e, max trace rise %.2e; ", tally.worst_asym, tally.worst_eig,
                      tally.worst_trace_rise) +
                  fmt("violations %.0f, replay mismatches %.0f; jacobian max |FD-H| %.2e over 1000 pairs",
                      static_cast<double>(tally.violations), static_cast<double>(tally.mismatches), worst_fd)};
}

Outcome wma_sma() {
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  std::uniform_real_distribution<double> wv(0.01, 50.0);
  int bit_equal = 0, in_range = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
    std::vector<Vec2> fixes(n);
    for (auto& f : fixes) f = Vec2(u(rng), u(rng));
    const std::vector<double> flat(n, wv(rng));
    const Vec2 a = wma(fixes, flat), b = sma(fixes);
    if (std::memcmp(a.data(), b.data(), sizeof(double) * 2) == 0) ++bit_equal;
    std::vector<double> w(n);
    for (auto& x : w) x = wv(rng);
    const Vec2 s = wma(fixes, w);
    Vec2 lo = fixes[0], hi = fixes[0];
    for (const auto& f : fixes) {
      lo = lo.cwiseMin(f);
      hi = hi.cwiseMax(f);
    }
    if (s.x() >= lo.x() && s.x() <= hi.x() && s.y() >= lo.y() && s.y() <= hi.y()) ++in_range;
  }
  return {bit_equal == 1000 && in_range == 1000,
          fmt("equal-weight WMA == SMA bitwise %.0f/1000; WMA within per-axis range %.0f/1000",
              static_cast<double>(bit_equal), static_cast<double>(in_range))};
}

Outcome convergence() {
  Scenario sc = replica_scenario();
  RpsConfig cfg = replica_config();
  // A parked receiver cannot survey the constellation; the calibrated mode
  // would fall back to this same seeded frame after a wasted attempt.
  cfg.anchor_mode = AnchorMode::seeded;
  const std::vector<int> windows = {5, 50};
  int wins = 0;
  std::vector<double> s5, s50;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<SweepRecord> sweeps;
    for (int k = 0; k < 120; ++k) {
      TruthSample s;
      s.k = k;
      s.timestamp = Timestamp{sc.start_time.micros + k * 1000000LL};
      s.position = Vec2(130, 220);
      sweeps.push_back(synth_sweep(s, sc, rng));
    }
    cfg.anchor_seed = seed;
    const auto pts = window_convergence(sweeps, cfg, windows);
    if (pts[1].spread_m < pts[0].spread_m) ++wins;
    s5.push_back(pts[0].spread_m);
    s50.push_back(pts[1].spread_m);
  }
  return {wins >= 45, fmt("spread(N_F=50) < spread(N_F=5) in %.0f/50 seeds (need 45); median spread %.3f m vs %.3f m",
                          static_cast<double>(wins), median(s50), median(s5))};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome online_batch_determinism() {
  const RpsConfig cfg = replica_config();
  int identical = 0;
  const int runs = 5;
  for (int seed = 1; seed <= runs; ++seed) {
    Scenario sc = replica_scenario();
    sc.seed = static_cast<std::uint64_t>(seed);
    const auto sim = simulate_run(sc);
    const auto batch = run_rps(sim.sweeps, cfg);
    RpsPipeline online(cfg);
    std::vector<TrajectoryRecord> streamed;
    for (const auto& s : sim.sweeps) {
      for (auto& r : online.push(s)) streamed.push_back(r);
    }
    for (auto& r : online.finish()) streamed.push_back(r);
    std::ostringstream a, b;
    write_trajectory_csv(a, batch.records);
    write_trajectory_csv(b, streamed);
    bool same = a.str() == b.str() && streamed.size() == batch.records.size();
    for (std::size_t i = 0; same && i < streamed.size(); ++i) {
      same = std::memcmp(streamed[i].ekf.data(), batch.records[i].ekf.data(), sizeof(double) * 2) == 0 &&
             std::memcmp(streamed[i].raw.data(), batch.records[i].raw.data(), sizeof(double) * 2) == 0 &&
             std::memcmp(streamed[i].wma.data(), batch.records[i].wma.data(), sizeof(double) * 2) == 0;
    }
    if (same) ++identical;
  }

  const fs::path dir = fs::temp_directory_path() / "rps_acceptance_determinism";
  fs::remove_all(dir);
  const std::string scenario = source_path("data/route_replica.scenario").string();
  const std::string config = source_path("configs/route_replica.conf").string();
  bool files_equal = true;
  for (const char* tag : {"a", "b"}) {
    const std::string out = (dir / tag).string();
    if (cli::run({"rps_cli", "simulate", "--scenario", scenario, "--out", out, "--seed", "7"}) != 0 ||
        cli::run({"rps_cli", "run", "--config", config, out + "/sweeps.csv", "--out", out, "--seed", "7"}) != 0) {
      files_equal = false;
    }
  }
  for (const char* f : {"sweeps.csv", "truth.csv", "waypoints.csv", "trajectory.csv", "summary.txt"}) {
    const std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    files_equal = files_equal && !a.empty() && a == b;
  }
  fs::remove_all(dir);
  return {identical == runs && files_equal,
          fmt("streaming == batch bitwise on %.0f/%.0f runs; two CLI invocations with --seed 7 byte-identical: ",
              identical, runs) +
              (files_equal ? "yes" : "no")};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report(1, "multilateration exactness", multilateration_exactness);
  report(2, "path-loss round trip", pathloss_round_trip);
  report(3, "error-metric fidelity", error_metric_fidelity);
  report(4, "five-waypoint route replica", route_replica);
  report(5, "EKF invariant suite", ekf_invariants);
  report(6, "WMA/SMA", wma_sma);
  report(7, "convergence on a static scene", convergence);
  report(8, "online/batch equivalence and determinism", online_batch_determinism);
  std::printf("%d of 8 criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
