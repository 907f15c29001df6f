#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"

using namespace rps;
using namespace rps::test;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rps_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rps_cli");
  return cli::run(args);
}

struct CoutCapture {
  std::ostringstream buffer;
  std::streambuf* saved = std::cout.rdbuf(buffer.rdbuf());
  ~CoutCapture() { std::cout.rdbuf(saved); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const std::string kScenario = source_path("data/route_replica.scenario").string();
const std::string kConfig = source_path("configs/route_replica.conf").string();

}  // namespace

TEST_CASE("cli exit codes") {
  TempDir dir("codes");
  CHECK(invoke({"run", "--config", kConfig, dir / "missing.csv", "--out", dir / "o"}) == cli::kExitInput);
  CHECK(invoke({"run", "--config", dir / "missing.conf", dir / "missing.csv"}) == cli::kExitInput);
  write_text(dir / "bad.conf", "tx_count = 2\n");
  write_text(dir / "x.csv", "");
  CHECK(invoke({"run", "--config", dir / "bad.conf", dir / "x.csv"}) == cli::kExitConfig);
  write_text(dir / "empty.scenario", "waypoint = 0, 0\nwaypoint = 10, 0\n");
  CHECK(invoke({"simulate", "--scenario", dir / "empty.scenario", "--out", dir / "s"}) == cli::kExitConfig);
  CHECK(invoke({"frobnicate"}) == cli::kExitConfig);
  CHECK(invoke({"run", "--no-such-flag", "x"}) == cli::kExitConfig);
  {
    CoutCapture quiet;
    CHECK(invoke({"--help"}) == cli::kExitOk);
  }
  write_text(dir / "garbage.csv", "2024-01-01, 00:00:00, 0, 1000000, 1000000, 1, oops\n");
  CHECK(invoke({"run", "--config", kConfig, dir / "garbage.csv", "--out", dir / "g"}) == cli::kExitInput);
}

TEST_CASE("simulate, run and eval end to end") {
  TempDir dir("e2e");
  REQUIRE(invoke({"simulate", "--scenario", kScenario, "--out", dir / "sim", "--seed", "7"}) == cli::kExitOk);
  std::istringstream truth_text(slurp(dir / "sim/truth.csv"));
  const auto truth = read_truth_csv(truth_text);
  double route = 0.0;
  for (std::size_t i = 1; i < truth.samples.size(); ++i) {
    route += (truth.samples[i].position - truth.samples[i - 1].position).norm();
  }
  CHECK(route == doctest::Approx(1860.0).epsilon(1e-6));

  REQUIRE(invoke({"run", "--config", kConfig, dir / "sim/sweeps.csv", "--out", dir / "run", "--seed", "7"}) ==
          cli::kExitOk);
  const std::string traj = slurp(dir / "run/trajectory.csv");
  CHECK(traj.rfind("k,timestamp,x_raw,y_raw,x_wma,y_wma,x_ekf,y_ekf,residual,flags\n", 0) == 0);
  CHECK(line_count(traj) == truth.samples.size() + 1);
  CHECK(traj.find('\r') == std::string::npos);
  CHECK_FALSE(slurp(dir / "run/summary.txt").empty());

  {
    CoutCapture table;
    REQUIRE(invoke({"eval", "--truth", dir / "sim/truth.csv", "--trajectory", dir / "run/trajectory.csv",
                 "--waypoints", dir / "sim/waypoints.csv", "--out", dir / "eval"}) == cli::kExitOk);
    const std::string shown = table.buffer.str();
    CHECK(shown.find("wma") != std::string::npos);
    CHECK(shown.find("270/0") != std::string::npos);
  }
  const std::string report = slurp(dir / "eval/report.csv");
  CHECK(report.rfind("estimator,segment,truth_m,estimated_m,percent\n", 0) == 0);
  CHECK(line_count(report) == 13);

  // Same inputs and seed give byte-identical files.
  REQUIRE(invoke({"simulate", "--scenario", kScenario, "--out", dir / "sim2", "--seed", "7"}) == cli::kExitOk);
  REQUIRE(invoke({"run", "--config", kConfig, dir / "sim2/sweeps.csv", "--out", dir / "run2", "--seed", "7"}) ==
          cli::kExitOk);
  for (const char* f : {"sim/sweeps.csv", "sim/truth.csv", "sim/waypoints.csv"}) {
    CHECK(slurp(dir / f) == slurp(dir / (std::string("sim2") + (f + 3))));
  }
  CHECK(slurp(dir / "run2/trajectory.csv") == traj);
  CHECK(slurp(dir / "run2/summary.txt") == slurp(dir / "run/summary.txt"));

  // A truncated trajectory no longer covers every waypoint.
  const std::string cut = traj.substr(0, traj.find('\n', traj.size() / 2) + 1);
  write_text(dir / "cut.csv", cut);
  {
    CoutCapture quiet;
    CHECK(invoke({"eval", "--truth", dir / "sim/truth.csv", "--trajectory", dir / "cut.csv", "--waypoints",
               dir / "sim/waypoints.csv", "--out", dir / "eval2"}) == cli::kExitDataShape);
  }
}

TEST_CASE("eval of a perfect trajectory") {
  TempDir dir("perfect");
  REQUIRE(invoke({"simulate", "--scenario", kScenario, "--out", dir.path.string()}) == cli::kExitOk);
  std::istringstream truth_text(slurp(dir / "truth.csv"));
  const auto truth = read_truth_csv(truth_text);
  std::vector<TrajectoryRecord> recs;
  for (const auto& s : truth.samples) {
    TrajectoryRecord r;
    r.k = s.k;
    r.timestamp = s.timestamp;
    r.raw = r.wma = r.ekf = s.position;
    recs.push_back(r);
  }
  write_text(dir / "trajectory.csv", trajectory_text(recs));
  CoutCapture table;
  REQUIRE(invoke({"eval", "--truth", dir / "truth.csv", "--trajectory", dir / "trajectory.csv", "--waypoints",
               dir / "waypoints.csv", "--out", dir.path.string()}) == cli::kExitOk);
  std::istringstream report(slurp(dir / "report.csv"));
  std::string line;
  std::getline(report, line);
  int rows = 0;
  while (std::getline(report, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "0.000000");
    ++rows;
  }
  CHECK(rows == 12);
  CHECK(table.buffer.str().find("wma\t270/0.00\t490/0.00\t260/0.00\t840/0.00") != std::string::npos);
}

TEST_CASE("parameter grid has one row per cell and segment") {
  TempDir dir("grid");
  write_text(dir / "fast.conf", slurp(kConfig) + "\nanchors.mode = seeded\n");
  CoutCapture table;
  REQUIRE(invoke({"eval", "--scenario", source_path("data/route_grid13.scenario").string(), "--config",
               dir / "fast.conf", "--npl-list", "2.8,2.85,2.9", "--txcount-list", "6,9,13", "--window-list",
               "3,4", "--seeds", "1", "--out", dir.path.string()}) == cli::kExitOk);
  const std::string grid = slurp(dir / "grid.csv");
  CHECK(line_count(grid) == 1 + 18 * 4);
  CHECK(grid.find("nan") == std::string::npos);
  CHECK(line_count(table.buffer.str()) == 19);
}

TEST_CASE("convergence series") {
  TempDir dir("conv");
  const auto sweeps = static_sweeps(0.0, 1, 60);
  {
    std::ofstream out(dir / "static.csv");
    const auto plan = replica_scenario().band_plan(6);
    for (const auto& s : sweeps) write_sweep(out, s, plan);
  }
  write_text(dir / "seeded.conf", slurp(kConfig) + "\nanchors.mode = seeded\n");
  REQUIRE(invoke({"convergence", "--sweeps", dir / "static.csv", "--config", dir / "seeded.conf", "--fractions",
               "0.25,0.5,1", "--windows", "5,10,50", "--out", dir.path.string()}) == cli::kExitOk);
  const std::string window = slurp(dir / "convergence_window.csv");
  CHECK(window ==
        "window_sweeps,spread_m,fixes\n"
        "5.000000,0.000000,60\n"
        "10.000000,0.000000,60\n"
        "50.000000,0.000000,60\n");
  const std::string spectrum = slurp(dir / "convergence_spectrum.csv");
  CHECK(spectrum.rfind("spectrum_fraction,spread_m,fixes\n0.250000,nan,0\n", 0) == 0);
  CHECK(spectrum.find("1.000000,0.000000,60\n") != std::string::npos);
  CHECK(invoke({"convergence", "--config", kConfig, "--out", dir.path.string()}) == cli::kExitConfig);
}
