#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "rps/config.hpp"
#include "rps/pipeline.hpp"
#include "rps/simulator.hpp"

namespace rps::test {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(RPS_SOURCE_DIR) / rel;
}

inline Scenario replica_scenario() {
  return load_scenario(KeyValueFile::load(source_path("data/route_replica.scenario")));
}

inline RpsConfig replica_config() {
  return load_rps_config(KeyValueFile::load(source_path("configs/route_replica.conf")));
}

// Scenario anchors given to the pipeline at their true positions.
inline RpsConfig with_true_anchors(RpsConfig cfg, const Scenario& sc) {
  cfg.anchor_mode = AnchorMode::given;
  cfg.given_anchors.clear();
  for (const auto& tx : sc.transmitters) cfg.given_anchors.push_back({tx.fc_mhz, tx.position});
  return cfg;
}

inline std::string trajectory_text(std::span<const TrajectoryRecord> records) {
  std::ostringstream out;
  write_trajectory_csv(out, records);
  return out.str();
}

}  // namespace rps::test

namespace rps::test {

// A receiver parked at `where` for `count` sweeps of the replica transmitters.
inline std::vector<SweepRecord> static_sweeps(double sigma_db, std::uint64_t seed, int count,
                                              const Vec2& where = Vec2(130, 220)) {
  Scenario sc = replica_scenario();
  sc.path_loss.shadowing_sigma_db = sigma_db;
  std::mt19937_64 rng(seed);
  std::vector<SweepRecord> out;
  for (int k = 0; k < count; ++k) {
    TruthSample s;
    s.k = k;
    s.timestamp = Timestamp{sc.start_time.micros + k * 1000000LL};
    s.position = where;
    out.push_back(synth_sweep(s, sc, rng));
  }
  return out;
}

}  // namespace rps::test
