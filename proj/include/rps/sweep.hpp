// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Spectrum-sweep ingestion: hackrf_sweep-compatible CSV parsing, binning onto a
// band plan, a rolling window of sweeps and the per-band windowed mean power.

#include <compare>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rps {

using BandId = std::int64_t;

/// UTC instant with microsecond resolution.
struct Timestamp {
  std::int64_t micros = 0;

  static Timestamp from_seconds(double s);
  double seconds() const noexcept { return static_cast<double>(micros) * 1e-6; }
  auto operator<=>(const Timestamp&) const = default;
};

/// Parses "YYYY-MM-DD" and "HH:MM:SS[.ffffff]" (UTC).
Timestamp parse_timestamp(std::string_view date, std::string_view time);
/// Inverse of parse_timestamp: {"YYYY-MM-DD", "HH:MM:SS.ffffff"}.
std::pair<std::string, std::string> format_timestamp(Timestamp t);
/// Seconds since the epoch with exactly 6 fractional digits, e.g. "1700000000.250000".
std::string format_timestamp_seconds(Timestamp t);

struct BandSample {
  BandId band_id = 0;
  double center_freq_mhz = 0.0;
  double rss_dbm = 0.0;

  bool operator==(const BandSample&) const = default;
};

/// One pass over the monitored spectrum. Bands are sorted by strictly increasing id.
struct SweepRecord {
  Timestamp timestamp;
  std::vector<BandSample> bands;

  const BandSample* find(BandId id) const noexcept;
  bool operator==(const SweepRecord&) const = default;
};

struct BandDef {
  BandId id = 0;
  double freq_low_mhz = 0.0;
  double freq_high_mhz = 0.0;

  double center_mhz() const noexcept { return 0.5 * (freq_low_mhz + freq_high_mhz); }
};

/// Frequency bands monitored by the receiver, and how many of them become anchors.
///
/// Either explicit (a list of non-overlapping [low, high) ranges) or uniform
/// (contiguous bands of fixed width from 0 MHz, id = floor(f / width)).
class BandPlan {
 public:
  static constexpr int kMinSelection = 4;

  static BandPlan uniform(double width_mhz, double max_mhz, int selection_count);
  static BandPlan explicit_ranges(std::vector<BandDef> bands, int selection_count);
  /// Same bands, different anchor count.
  BandPlan with_selection_count(int selection_count) const;

  /// Band containing `freq_mhz`, if any.
  std::optional<BandDef> locate(double freq_mhz) const;
  std::optional<BandDef> band(BandId id) const;
  /// Materialized band list (may be large for a fine uniform plan).
  std::vector<BandDef> bands() const;

  int selection_count() const noexcept { return selection_count_; }
  bool is_uniform() const noexcept { return uniform_width_ > 0.0; }
  double uniform_width_mhz() const noexcept { return uniform_width_; }

 private:
  BandPlan() = default;
  std::vector<BandDef> explicit_;  // sorted by freq_low
  double uniform_width_ = 0.0;
  double uniform_max_ = 0.0;
  int selection_count_ = 6;
};

/// Pull-style reader over a sweep CSV stream. Consecutive rows with identical
/// (date, time) are merged into one SweepRecord. Multiple bins landing in the
/// same band are averaged in dB; bins outside the plan are dropped.
class SweepReader {
 public:
  SweepReader(std::istream& in, BandPlan plan);

  /// Next merged sweep, or nullopt at end of stream.
  std::optional<SweepRecord> next();
  std::size_t line_number() const noexcept { return line_no_; }

 private:
  struct Row {
    Timestamp ts;
    std::string stamp_key;
    std::vector<std::pair<double, double>> bins;  // (center MHz, dB)
  };
  std::optional<Row> read_row();
  SweepRecord finish(const std::vector<Row>& rows) const;

  std::istream& in_;
  BandPlan plan_;
  std::size_t line_no_ = 0;
  std::optional<Row> pending_;
  std::optional<Timestamp> last_ts_;
};

/// Reads every sweep of a file. Missing/unreadable file -> InputError.
std::vector<SweepRecord> parse_sweep_file(const std::filesystem::path& path, const BandPlan& plan);
std::vector<SweepRecord> parse_sweep_stream(std::istream& in, const BandPlan& plan);

/// Writes `record` as sweep CSV rows; contiguous equal-width bands are grouped
/// up to `bins_per_row` values per row. Values use shortest round-trip formatting.
void write_sweep(std::ostream& out, const SweepRecord& record, const BandPlan& plan,
                 int bins_per_row = 5);

/// Windowed mean power of one band (theta), with its sample range.
struct BandStats {
  BandId band_id = 0;
  double center_freq_mhz = 0.0;
  double theta_dbm = 0.0;
  int sample_count = 0;
  double min_rss_dbm = 0.0;
  double max_rss_dbm = 0.0;
  /// Second central moment, kept for diagnostics only.
  double variance_db2 = 0.0;
};

/// The last N_F sweeps (oldest first).
class SweepWindow {
 public:
  explicit SweepWindow(std::size_t capacity);

  void push(SweepRecord record);
  void clear() noexcept { sweeps_.clear(); }
  std::size_t size() const noexcept { return sweeps_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return sweeps_.empty(); }
  bool full() const noexcept { return sweeps_.size() == capacity_; }
  const std::deque<SweepRecord>& sweeps() const noexcept { return sweeps_; }

 private:
  std::size_t capacity_;
  std::deque<SweepRecord> sweeps_;
};

/// Arithmetic mean (in dB) of a band's RSS over the window.
/// Empty window -> ContractError; band in no record -> MissingBandError.
BandStats band_mean(const SweepWindow& window, BandId band_id);
BandStats band_mean(std::span<const SweepRecord> window, BandId band_id);

/// Stats for every band present in every sweep of the window, in band-id order.
/// Uses the vectorized column kernel; agrees exactly with band_mean per band.
std::vector<BandStats> persistent_band_stats(const SweepWindow& window);

/// The `count` bands with highest theta (ties -> lower band id first).
/// Fewer than `count` usable bands -> InsufficientAnchorsError.
std::vector<BandId> select_transmit_bands(std::span<const BandStats> stats, int count);

}  // namespace rps
