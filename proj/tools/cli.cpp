// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "rps/error.hpp"
#include "rps/pipeline.hpp"
#include "rps/simulator.hpp"

namespace rps::cli {

namespace fs = std::filesystem;

namespace {

void setup_logging() {
  auto logger = spdlog::get("rps");
  if (!logger) logger = spdlog::stderr_logger_st("rps");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("RPS_LOG");
  spdlog::set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw InputError("no such file: " + path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
}

RpsConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  KeyValueFile file;
  if (!path.empty()) {
    require_file(path);
    file = KeyValueFile::load(path);
  }
  if (seed) file.set("anchors.seed", std::to_string(*seed));
  return load_rps_config(file);
}

Scenario load_scenario_file(const std::string& path, std::optional<std::uint64_t> seed) {
  require_file(path);
  KeyValueFile file = KeyValueFile::load(path);
  if (seed) file.set("seed", std::to_string(*seed));
  return load_scenario(file);
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string pair_cell(const SegmentError& s) {
  return fixed(s.estimated_m, 0) + "/" + fixed(s.percent, 2);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_summary(std::ostream& out, const RelativeTrajectory& traj) {
  const auto& d = traj.diagnostics;
  double res_sum = 0.0;
  double res_max = 0.0;
  std::size_t flagged = 0;
  for (const auto& r : traj.records) {
    res_sum += r.residual;
    res_max = std::max(res_max, r.residual);
    if ((r.flags & ~static_cast<std::uint32_t>(kFlagWarmup)) != 0) ++flagged;
  }
  out << "sweeps: " << d.sweeps_seen << "\n";
  out << "fixes: " << traj.records.size() << "\n";
  out << "sweeps_before_first_fix: " << d.sweeps_before_first_fix << "\n";
  out << "held_fixes: " << d.held_fixes << "\n";
  out << "ekf_failures: " << d.ekf_failures << "\n";
  out << "flagged_records: " << flagged << "\n";
  out << "frame: " << (d.frame_calibrated ? "calibrated" : "seeded") << "\n";
  if (d.survey) {
    out << "survey_worst_anchor_sigma_m: " << fixed(d.survey->worst_anchor_sigma_m, 3) << "\n";
    out << "survey_track_minor_extent_m: " << fixed(d.survey->track_minor_extent_m, 3) << "\n";
  }
  out << "bands:";
  for (BandId id : d.selected_bands) out << ' ' << id;
  out << "\n";
  if (!traj.records.empty()) {
    out << "residual_mean: " << fixed(res_sum / static_cast<double>(traj.records.size()), 6) << "\n";
    out << "residual_max: " << fixed(res_max, 6) << "\n";
  }
  for (const auto& m : d.messages) out << "note: " << m << "\n";
}

int cmd_run(const std::string& config_path, const std::string& input, const fs::path& out_dir,
            std::optional<std::uint64_t> seed) {
  const RpsConfig cfg = load_config(config_path, seed);
  require_file(input);
  std::ifstream in = open_input(input);
  ensure_dir(out_dir);
  SweepReader reader(in, cfg.plan);
  const RelativeTrajectory traj = run_rps(reader, cfg);
  {
    auto out = open_output(out_dir / "trajectory.csv");
    write_trajectory_csv(out, traj.records);
  }
  auto summary = open_output(out_dir / "summary.txt");
  write_summary(summary, traj);
  spdlog::info("{} fixes from {} sweeps", traj.records.size(), traj.diagnostics.sweeps_seen);
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed) {
  const Scenario sc = load_scenario_file(scenario_path, seed);
  const SimulationRun run = simulate_run(sc);
  ensure_dir(out_dir);
  const BandPlan plan = sc.band_plan(BandPlan::kMinSelection);
  {
    auto out = open_output(out_dir / "sweeps.csv");
    for (const auto& s : run.sweeps) write_sweep(out, s, plan);
  }
  {
    auto out = open_output(out_dir / "truth.csv");
    write_truth_csv(out, run.truth);
  }
  {
    auto out = open_output(out_dir / "waypoints.csv");
    write_waypoints_csv(out, run.truth.waypoint_indices);
  }
  double length = 0.0;
  for (double l : run.truth.segment_lengths_m) length += l;
  spdlog::info("{} sweeps, route {:.3f} m, {} clamped samples", run.sweeps.size(), length,
               run.clamped);
  return kExitOk;
}

void print_table(std::ostream& out, const RunScore& score) {
  const char* names[] = {"raw", "wma", "ekf"};
  const EstimatorScore* rows[] = {&score.raw, &score.wma, &score.ekf};
  out << "estimator";
  for (std::size_t s = 0; s < score.wma.segments.size(); ++s) out << "\tseg" << s + 1 << "(m)/diff(%)";
  out << "\trmse(m)\n";
  out << "truth";
  for (const auto& s : score.wma.segments) out << '\t' << fixed(s.truth_m, 0) << "/0";
  out << "\t-\n";
  for (int i = 0; i < 3; ++i) {
    out << names[i];
    for (const auto& s : rows[i]->segments) out << '\t' << pair_cell(s);
    out << '\t' << fixed(rows[i]->rmse_m, 3) << '\n';
  }
}

void write_report_csv(std::ostream& out, const RunScore& score) {
  out << "estimator,segment,truth_m,estimated_m,percent\n";
  const char* names[] = {"raw", "wma", "ekf"};
  const EstimatorScore* rows[] = {&score.raw, &score.wma, &score.ekf};
  for (int i = 0; i < 3; ++i) {
    for (std::size_t s = 0; s < rows[i]->segments.size(); ++s) {
      const auto& seg = rows[i]->segments[s];
      out << names[i] << ',' << s + 1 << ',' << fixed(seg.truth_m, 6) << ','
          << fixed(seg.estimated_m, 6) << ',' << fixed(seg.percent, 6) << '\n';
    }
  }
}

int cmd_eval_files(const std::string& truth_path, const std::string& traj_path,
                   const std::string& waypoints_path, const fs::path& out_dir) {
  require_file(truth_path);
  require_file(traj_path);
  require_file(waypoints_path);
  auto tin = open_input(truth_path);
  GroundTruth truth = read_truth_csv(tin);
  auto win = open_input(waypoints_path);
  truth.waypoint_indices = read_waypoints_csv(win);
  auto rin = open_input(traj_path);
  const auto records = read_trajectory_csv(rin);
  const RunScore score = score_run(truth, records);
  ensure_dir(out_dir);
  {
    auto out = open_output(out_dir / "report.csv");
    write_report_csv(out, score);
  }
  print_table(std::cout, score);
  return kExitOk;
}

struct GridOptions {
  std::vector<double> npl;
  std::vector<int> tx_counts;
  std::vector<int> windows;
  int seeds = 10;
};

int cmd_eval_grid(const std::string& scenario_path, const std::string& config_path,
                  const fs::path& out_dir, std::optional<std::uint64_t> seed,
                  const GridOptions& grid) {
  const Scenario base = load_scenario_file(scenario_path, std::nullopt);
  const RpsConfig base_cfg = load_config(config_path, std::nullopt);
  const std::uint64_t first_seed = seed.value_or(1);
  ensure_dir(out_dir);
  auto csv = open_output(out_dir / "grid.csv");
  csv << "n_pl,tx_count,window,segment,truth_m,median_wma_m,median_wma_percent,median_ekf_m,"
         "median_ekf_percent\n";
  std::cout << "n_pl\ttx\twindow";
  for (std::size_t s = 1; s < base.waypoints.size(); ++s) std::cout << "\tseg" << s << " wma(m)/diff(%)";
  std::cout << '\n';
  // Simulations depend only on the seed; cache them across cells.
  std::vector<SimulationRun> runs;
  for (int i = 0; i < grid.seeds; ++i) {
    Scenario sc = base;
    sc.seed = first_seed + static_cast<std::uint64_t>(i);
    runs.push_back(simulate_run(sc));
  }
  for (double npl : grid.npl) {
    for (int tx : grid.tx_counts) {
      for (int window : grid.windows) {
        RpsConfig cfg = base_cfg;
        cfg.path_loss.n_pl = npl;
        cfg.smoother.window = window;
        cfg.smoother.weights.clear();
        cfg.plan = base.band_plan(tx);
        const std::size_t segs = base.waypoints.size() - 1;
        std::vector<std::vector<double>> wm(segs), wp(segs), em(segs), ep(segs);
        std::vector<double> truth_len(segs, 0.0);
        for (int i = 0; i < grid.seeds; ++i) {
          cfg.anchor_seed = first_seed + static_cast<std::uint64_t>(i);
          const RelativeTrajectory traj = run_rps(runs[static_cast<std::size_t>(i)].sweeps, cfg);
          if (traj.records.empty()) continue;
          const RunScore sc = score_run(runs[static_cast<std::size_t>(i)].truth, traj.records);
          for (std::size_t s = 0; s < segs; ++s) {
            truth_len[s] = sc.wma.segments[s].truth_m;
            wm[s].push_back(sc.wma.segments[s].estimated_m);
            wp[s].push_back(sc.wma.segments[s].percent);
            em[s].push_back(sc.ekf.segments[s].estimated_m);
            ep[s].push_back(sc.ekf.segments[s].percent);
          }
        }
        std::cout << fixed(npl, 2) << '\t' << tx << '\t' << window;
        for (std::size_t s = 0; s < segs; ++s) {
          csv << fixed(npl, 6) << ',' << tx << ',' << window << ',' << s + 1 << ','
              << fixed(truth_len[s], 6) << ',' << fixed(median(wm[s]), 6) << ','
              << fixed(median(wp[s]), 6) << ',' << fixed(median(em[s]), 6) << ','
              << fixed(median(ep[s]), 6) << '\n';
          std::cout << '\t' << fixed(median(wm[s]), 0) << '/' << fixed(median(wp[s]), 2);
        }
        std::cout << '\n';
      }
    }
  }
  return kExitOk;
}

void write_series(const fs::path& path, const char* xname, std::span<const ConvergencePoint> pts) {
  auto out = open_output(path);
  out << xname << ",spread_m,fixes\n";
  for (const auto& p : pts) {
    out << fixed(p.x, 6) << ',' << (std::isnan(p.spread_m) ? std::string("nan") : fixed(p.spread_m, 6))
        << ',' << p.fixes << '\n';
  }
}

int cmd_convergence(const std::string& scenario_path, const std::string& sweeps_path,
                    const std::string& config_path, const fs::path& out_dir,
                    std::optional<std::uint64_t> seed, const std::vector<double>& fractions,
                    const std::vector<int>& windows) {
  RpsConfig cfg = load_config(config_path, seed);
  std::vector<SweepRecord> sweeps;
  if (!scenario_path.empty()) {
    const Scenario sc = load_scenario_file(scenario_path, seed);
    cfg.plan = sc.band_plan(cfg.plan.selection_count());
    sweeps = simulate_run(sc).sweeps;
  } else {
    require_file(sweeps_path);
    sweeps = parse_sweep_file(sweeps_path, cfg.plan);
  }
  ensure_dir(out_dir);
  write_series(out_dir / "convergence_spectrum.csv", "spectrum_fraction",
               spectrum_convergence(sweeps, cfg, fractions));
  write_series(out_dir / "convergence_window.csv", "window_sweeps", window_convergence(sweeps, cfg, windows));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  setup_logging();
  CLI::App app{"Relative positioning from spectrum sweeps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string input_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;

  auto* run_cmd = app.add_subcommand("run", "Sweep CSV -> relative trajectory");
  run_cmd->add_option("--config", config_path, "Pipeline config file");
  run_cmd->add_option("input", input_path, "Sweep CSV")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seed", seed, "Anchor placement seed");

  std::string scenario_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Scenario -> sweeps.csv, truth.csv, waypoints.csv");
  sim_cmd->add_option("--scenario,--config", scenario_path, "Scenario file")->required();
  sim_cmd->add_option("--out", out_dir, "Output directory");
  sim_cmd->add_option("--seed", seed, "Simulation seed");

  std::string truth_path;
  std::string traj_path;
  std::string waypoints_path;
  GridOptions grid;
  auto* eval_cmd = app.add_subcommand("eval", "Segment error report, or a parameter grid");
  eval_cmd->add_option("--truth", truth_path, "truth.csv");
  eval_cmd->add_option("--trajectory", traj_path, "trajectory.csv");
  eval_cmd->add_option("--waypoints", waypoints_path, "Waypoint index file");
  eval_cmd->add_option("--scenario", scenario_path, "Scenario for grid mode");
  eval_cmd->add_option("--config", config_path, "Pipeline config for grid mode");
  eval_cmd->add_option("--npl-list", grid.npl, "Grid: path-loss exponents")->delimiter(',');
  eval_cmd->add_option("--txcount-list", grid.tx_counts, "Grid: transmitter counts")->delimiter(',');
  eval_cmd->add_option("--window-list", grid.windows, "Grid: smoother windows")->delimiter(',');
  eval_cmd->add_option("--seeds", grid.seeds, "Grid: Monte-Carlo runs per cell")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", out_dir, "Output directory");
  eval_cmd->add_option("--seed", seed, "Grid: first seed");

  std::string sweeps_path;
  std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<int> windows = {1, 2, 5, 10, 20, 30, 40, 50};
  auto* conv_cmd = app.add_subcommand("convergence", "Coordinate spread vs spectrum and vs sweeps");
  conv_cmd->add_option("--scenario", scenario_path, "Scenario to simulate");
  conv_cmd->add_option("--sweeps", sweeps_path, "Recorded sweep CSV instead of a scenario");
  conv_cmd->add_option("--config", config_path, "Pipeline config file");
  conv_cmd->add_option("--fractions", fractions, "Spectrum cutoffs (fractions)")->delimiter(',');
  conv_cmd->add_option("--windows", windows, "Sweep window lengths")->delimiter(',');
  conv_cmd->add_option("--out", out_dir, "Output directory");
  conv_cmd->add_option("--seed", seed, "Seed");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, input_path, out_dir, seed);
    if (sim_cmd->parsed()) return cmd_simulate(scenario_path, out_dir, seed);
    if (eval_cmd->parsed()) {
      const bool grid_mode = !grid.npl.empty() || !grid.tx_counts.empty() || !grid.windows.empty();
      if (grid_mode) {
        if (scenario_path.empty()) throw ConfigError("grid mode needs --scenario");
        if (grid.npl.empty()) grid.npl = {2.8};
        if (grid.tx_counts.empty()) grid.tx_counts = {6};
        if (grid.windows.empty()) grid.windows = {3};
        return cmd_eval_grid(scenario_path, config_path, out_dir, seed, grid);
      }
      if (truth_path.empty() || traj_path.empty() || waypoints_path.empty()) {
        throw ConfigError("eval needs --truth, --trajectory and --waypoints (or grid flags)");
      }
      return cmd_eval_files(truth_path, traj_path, waypoints_path, out_dir);
    }
    if (conv_cmd->parsed()) {
      if (scenario_path.empty() == sweeps_path.empty()) {
        throw ConfigError("convergence needs exactly one of --scenario or --sweeps");
      }
      return cmd_convergence(scenario_path, sweeps_path, config_path, out_dir, seed, fractions,
                             windows);
    }
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const InputError& e) {
    spdlog::error("input: {}", e.what());
    return kExitInput;
  } catch (const ParseError& e) {
    spdlog::error("input: {}", e.what());
    return kExitInput;
  } catch (const Error& e) {
    spdlog::error("data: {}", e.what());
    return kExitDataShape;
  }
  return kExitConfig;
}

}  // namespace rps::cli
