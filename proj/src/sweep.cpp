// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "rps/error.hpp"
#include "rps/kernels.hpp"

namespace rps {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  // hackrf_sweep terminates rows with ", " on some versions.
  if (out.size() > 1 && out.back().empty()) out.pop_back();
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

int parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, bool& ok) {
  if (pos + len > s.size()) {
    ok = false;
    return 0;
  }
  auto v = parse_number<int>(s.substr(pos, len));
  if (!v) ok = false;
  return v.value_or(0);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename It>
BandStats band_mean_impl(It first, It last, BandId band_id) {
  if (first == last) throw ContractError("band_mean: empty window");
  BandStats stats;
  stats.band_id = band_id;
  double sum = 0.0;
  int n = 0;
  for (It it = first; it != last; ++it) {
    const BandSample* s = it->find(band_id);
    if (s == nullptr) continue;
    if (n == 0) {
      sum = s->rss_dbm;
      stats.min_rss_dbm = s->rss_dbm;
      stats.max_rss_dbm = s->rss_dbm;
    } else {
      sum = sum + s->rss_dbm;
      stats.min_rss_dbm = std::min(stats.min_rss_dbm, s->rss_dbm);
      stats.max_rss_dbm = std::max(stats.max_rss_dbm, s->rss_dbm);
    }
    stats.center_freq_mhz = s->center_freq_mhz;
    ++n;
  }
  if (n == 0) throw MissingBandError("band " + std::to_string(band_id) + " absent from window");
  stats.sample_count = n;
  stats.theta_dbm = sum / static_cast<double>(n);
  double ss = 0.0;
  for (It it = first; it != last; ++it) {
    if (const BandSample* s = it->find(band_id)) {
      const double d = s->rss_dbm - stats.theta_dbm;
      ss += d * d;
    }
  }
  stats.variance_db2 = ss / static_cast<double>(n);
  return stats;
}

}  // namespace

Timestamp Timestamp::from_seconds(double s) {
  return Timestamp{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

Timestamp parse_timestamp(std::string_view date, std::string_view time) {
  using namespace std::chrono;
  bool ok = date.size() == 10 && date[4] == '-' && date[7] == '-';
  const int y = parse_fixed_int(date, 0, 4, ok);
  const int mo = parse_fixed_int(date, 5, 2, ok);
  const int d = parse_fixed_int(date, 8, 2, ok);
  ok = ok && time.size() >= 8 && time[2] == ':' && time[5] == ':';
  const int hh = parse_fixed_int(time, 0, 2, ok);
  const int mm = parse_fixed_int(time, 3, 2, ok);
  const int ss = parse_fixed_int(time, 6, 2, ok);
  std::int64_t frac_us = 0;
  if (ok && time.size() > 8) {
    if (time[8] != '.' || time.size() == 9 || time.size() > 15) {
      ok = false;
    } else {
      const std::string_view digits = time.substr(9);
      auto v = parse_number<std::int64_t>(digits);
      if (!v || *v < 0) {
        ok = false;
      } else {
        frac_us = *v;
        for (std::size_t i = digits.size(); i < 6; ++i) frac_us *= 10;
      }
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw ParseError("bad timestamp '" + std::string(date) + ", " + std::string(time) + "'", 0);
  }
  const auto day_us = duration_cast<microseconds>(sys_days{ymd}.time_since_epoch()).count();
  return Timestamp{day_us + ((hh * 60LL + mm) * 60LL + ss) * 1000000LL + frac_us};
}

std::string format_timestamp_seconds(Timestamp t) {
  const bool negative = t.micros < 0;
  const auto mag = negative ? -static_cast<unsigned long long>(t.micros)
                            : static_cast<unsigned long long>(t.micros);
  std::string frac = std::to_string(mag % 1'000'000ULL);
  frac.insert(0, 6 - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(mag / 1'000'000ULL) + "." + frac;
}

std::pair<std::string, std::string> format_timestamp(Timestamp t) {
  using namespace std::chrono;
  constexpr std::int64_t kDay = 86400LL * 1000000LL;
  std::int64_t days = t.micros / kDay;
  std::int64_t rem = t.micros % kDay;
  if (rem < 0) {
    rem += kDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const std::int64_t secs = rem / 1000000;
  const std::int64_t us = rem % 1000000;
  char date[16];
  char clock[32];
  std::snprintf(date, sizeof date, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  std::snprintf(clock, sizeof clock, "%02lld:%02lld:%02lld.%06lld",
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60), static_cast<long long>(us));
  return {date, clock};
}

const BandSample* SweepRecord::find(BandId id) const noexcept {
  auto it = std::lower_bound(bands.begin(), bands.end(), id,
                             [](const BandSample& s, BandId v) { return s.band_id < v; });
  return it != bands.end() && it->band_id == id ? &*it : nullptr;
}

// ---------------------------------------------------------------------------

BandPlan BandPlan::uniform(double width_mhz, double max_mhz, int selection_count) {
  if (!(width_mhz > 0.0) || !(max_mhz > 0.0)) throw ConfigError("uniform band plan: width and max must be > 0");
  if (selection_count < kMinSelection) {
    throw ConfigError("band plan: selection count must be >= 4 (got " +
                      std::to_string(selection_count) + ")");
  }
  BandPlan plan;
  plan.uniform_width_ = width_mhz;
  plan.uniform_max_ = max_mhz;
  plan.selection_count_ = selection_count;
  return plan;
}

BandPlan BandPlan::with_selection_count(int selection_count) const {
  if (selection_count < kMinSelection) {
    throw ConfigError("band plan: selection count must be >= 4 (got " +
                      std::to_string(selection_count) + ")");
  }
  BandPlan plan = *this;
  plan.selection_count_ = selection_count;
  return plan;
}

BandPlan BandPlan::explicit_ranges(std::vector<BandDef> bands, int selection_count) {
  if (selection_count < kMinSelection) {
    throw ConfigError("band plan: selection count must be >= 4 (got " +
                      std::to_string(selection_count) + ")");
  }
  std::sort(bands.begin(), bands.end(),
            [](const BandDef& a, const BandDef& b) { return a.freq_low_mhz < b.freq_low_mhz; });
  std::set<BandId> ids;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!(bands[i].freq_high_mhz > bands[i].freq_low_mhz) || bands[i].freq_low_mhz < 0.0) {
      throw ConfigError("band plan: band " + std::to_string(bands[i].id) + " has an empty range");
    }
    if (i > 0 && bands[i].freq_low_mhz < bands[i - 1].freq_high_mhz) {
      throw ConfigError("band plan: bands " + std::to_string(bands[i - 1].id) + " and " +
                        std::to_string(bands[i].id) + " overlap");
    }
    if (!ids.insert(bands[i].id).second) {
      throw ConfigError("band plan: duplicate band id " + std::to_string(bands[i].id));
    }
  }
  BandPlan plan;
  plan.explicit_ = std::move(bands);
  plan.selection_count_ = selection_count;
  return plan;
}

std::optional<BandDef> BandPlan::locate(double freq_mhz) const {
  if (is_uniform()) {
    if (!(freq_mhz >= 0.0) || !(freq_mhz < uniform_max_)) return std::nullopt;
    const auto id = static_cast<BandId>(std::floor(freq_mhz / uniform_width_));
    return band(id);
  }
  auto it = std::upper_bound(explicit_.begin(), explicit_.end(), freq_mhz,
                             [](double f, const BandDef& b) { return f < b.freq_low_mhz; });
  if (it == explicit_.begin()) return std::nullopt;
  --it;
  if (freq_mhz < it->freq_high_mhz) return *it;
  return std::nullopt;
}

std::optional<BandDef> BandPlan::band(BandId id) const {
  if (is_uniform()) {
    const double low = static_cast<double>(id) * uniform_width_;
    if (id < 0 || !(low < uniform_max_)) return std::nullopt;
    return BandDef{id, low, static_cast<double>(id + 1) * uniform_width_};
  }
  for (const auto& b : explicit_) {
    if (b.id == id) return b;
  }
  return std::nullopt;
}

std::vector<BandDef> BandPlan::bands() const {
  if (!is_uniform()) return explicit_;
  std::vector<BandDef> out;
  for (BandId id = 0;; ++id) {
    auto b = band(id);
    if (!b) break;
    out.push_back(*b);
  }
  return out;
}

// ---------------------------------------------------------------------------

SweepReader::SweepReader(std::istream& in, BandPlan plan) : in_(in), plan_(std::move(plan)) {}

std::optional<SweepReader::Row> SweepReader::read_row() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() < 7) {
      throw ParseError("expected at least 7 comma-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no_);
    }
    Row row;
    try {
      row.ts = parse_timestamp(fields[0], fields[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no_);
    }
    const auto hz_low = parse_number<double>(fields[2]);
    const auto hz_high = parse_number<double>(fields[3]);
    const auto bin_width = parse_number<double>(fields[4]);
    const auto samples = parse_number<double>(fields[5]);
    if (!hz_low || !hz_high || !bin_width || !samples) {
      throw ParseError("non-numeric frequency/sample header field", line_no_);
    }
    if (!(*hz_high > *hz_low) || !(*bin_width > 0.0) || *hz_low < 0.0) {
      throw ParseError("invalid frequency range", line_no_);
    }
    const std::size_t nbins = fields.size() - 6;
    if (std::abs((*hz_high - *hz_low) - static_cast<double>(nbins) * *bin_width) >
        0.5 * *bin_width) {
      throw ParseError("bin count " + std::to_string(nbins) + " does not match range/width",
                       line_no_);
    }
    row.bins.reserve(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
      const auto db = parse_number<double>(fields[6 + i]);
      if (!db || !std::isfinite(*db)) {
        throw ParseError("bad dB value '" + std::string(fields[6 + i]) + "'", line_no_);
      }
      const double center_hz = *hz_low + (static_cast<double>(i) + 0.5) * *bin_width;
      row.bins.emplace_back(center_hz / 1e6, *db);
    }
    if (last_ts_ && row.ts < *last_ts_) {
      throw ParseError("timestamp decreases", line_no_);
    }
    last_ts_ = row.ts;
    return row;
  }
  return std::nullopt;
}

SweepRecord SweepReader::finish(const std::vector<Row>& rows) const {
  struct Acc {
    double sum = 0.0;
    int n = 0;
    double center = 0.0;
  };
  std::map<BandId, Acc> acc;
  for (const Row& row : rows) {
    for (const auto& [freq, db] : row.bins) {
      auto band = plan_.locate(freq);
      if (!band) continue;
      Acc& a = acc[band->id];
      a.sum = a.n == 0 ? db : a.sum + db;
      ++a.n;
      a.center = band->center_mhz();
    }
  }
  SweepRecord rec;
  rec.timestamp = rows.front().ts;
  rec.bands.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    rec.bands.push_back({id, a.center, a.sum / static_cast<double>(a.n)});
  }
  return rec;
}

std::optional<SweepRecord> SweepReader::next() {
  std::vector<Row> rows;
  if (pending_) {
    rows.push_back(std::move(*pending_));
    pending_.reset();
  } else if (auto r = read_row()) {
    rows.push_back(std::move(*r));
  } else {
    return std::nullopt;
  }
  while (auto r = read_row()) {
    if (r->ts == rows.front().ts) {
      rows.push_back(std::move(*r));
    } else {
      pending_ = std::move(r);
      break;
    }
  }
  return finish(rows);
}

std::vector<SweepRecord> parse_sweep_stream(std::istream& in, const BandPlan& plan) {
  SweepReader reader(in, plan);
  std::vector<SweepRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

std::vector<SweepRecord> parse_sweep_file(const std::filesystem::path& path, const BandPlan& plan) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sweep file '" + path.string() + "'");
  return parse_sweep_stream(in, plan);
}

namespace {

/// Whole hertz print as integers, the way the sweep tool writes them.
std::string format_hz(double hz) {
  const double r = std::round(hz);
  if (std::abs(hz - r) <= 1e-6 * std::max(1.0, std::abs(hz)) && std::abs(r) < 9e15) {
    return std::to_string(static_cast<long long>(r));
  }
  return format_double(hz);
}

}  // namespace

void write_sweep(std::ostream& out, const SweepRecord& record, const BandPlan& plan,
                 int bins_per_row) {
  if (bins_per_row < 1) throw ContractError("write_sweep: bins_per_row must be >= 1");
  const auto [date, clock] = format_timestamp(record.timestamp);
  std::vector<std::pair<BandDef, double>> cells;
  cells.reserve(record.bands.size());
  for (const auto& s : record.bands) {
    auto b = plan.band(s.band_id);
    if (!b) throw ContractError("write_sweep: band " + std::to_string(s.band_id) + " not in plan");
    cells.emplace_back(*b, s.rss_dbm);
  }
  std::size_t i = 0;
  while (i < cells.size()) {
    const double width = cells[i].first.freq_high_mhz - cells[i].first.freq_low_mhz;
    std::size_t j = i + 1;
    while (j < cells.size() && j - i < static_cast<std::size_t>(bins_per_row) &&
           cells[j].first.freq_low_mhz == cells[j - 1].first.freq_high_mhz &&
           cells[j].first.freq_high_mhz - cells[j].first.freq_low_mhz == width) {
      ++j;
    }
    const double lo_hz = cells[i].first.freq_low_mhz * 1e6;
    const double width_hz = width * 1e6;
    const double hi_hz = lo_hz + static_cast<double>(j - i) * width_hz;
    out << date << ", " << clock << ", " << format_hz(lo_hz) << ", " << format_hz(hi_hz) << ", "
        << format_hz(width_hz) << ", 1";
    for (std::size_t k = i; k < j; ++k) out << ", " << format_double(cells[k].second);
    out << '\n';
    i = j;
  }
}

// ---------------------------------------------------------------------------

SweepWindow::SweepWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("sweep window must hold at least one sweep");
}

void SweepWindow::push(SweepRecord record) {
  if (!sweeps_.empty() && record.timestamp < sweeps_.back().timestamp) {
    throw ContractError("sweep window: timestamps must be non-decreasing");
  }
  if (sweeps_.size() == capacity_) sweeps_.pop_front();
  sweeps_.push_back(std::move(record));
}

BandStats band_mean(const SweepWindow& window, BandId band_id) {
  return band_mean_impl(window.sweeps().begin(), window.sweeps().end(), band_id);
}

BandStats band_mean(std::span<const SweepRecord> window, BandId band_id) {
  return band_mean_impl(window.begin(), window.end(), band_id);
}

std::vector<BandStats> persistent_band_stats(const SweepWindow& window) {
  if (window.empty()) throw ContractError("persistent_band_stats: empty window");
  const auto& sweeps = window.sweeps();
  std::vector<BandId> ids;
  for (const auto& s : sweeps.back().bands) ids.push_back(s.band_id);
  for (const auto& rec : sweeps) {
    std::erase_if(ids, [&](BandId id) { return rec.find(id) == nullptr; });
  }
  const std::size_t rows = sweeps.size();
  const std::size_t cols = ids.size();
  std::vector<BandStats> out(cols);
  if (cols == 0) return out;

  std::vector<double> matrix(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) matrix[r * cols + c] = sweeps[r].find(ids[c])->rss_dbm;
  }
  std::vector<double> mean(cols), lo(cols), hi(cols);
  kernels::column_stats(matrix, rows, cols, mean, lo, hi);
  for (std::size_t c = 0; c < cols; ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = matrix[r * cols + c] - mean[c];
      ss += d * d;
    }
    out[c] = BandStats{ids[c],
                       sweeps.back().find(ids[c])->center_freq_mhz,
                       mean[c],
                       static_cast<int>(rows),
                       lo[c],
                       hi[c],
                       ss / static_cast<double>(rows)};
  }
  return out;
}

std::vector<BandId> select_transmit_bands(std::span<const BandStats> stats, int count) {
  if (count < 1) throw ContractError("select_transmit_bands: count must be >= 1");
  std::vector<const BandStats*> usable;
  for (const auto& s : stats) {
    if (s.sample_count >= 1) usable.push_back(&s);
  }
  if (usable.size() < static_cast<std::size_t>(count)) {
    throw InsufficientAnchorsError("only " + std::to_string(usable.size()) +
                                   " usable bands, need " + std::to_string(count));
  }
  std::sort(usable.begin(), usable.end(), [](const BandStats* a, const BandStats* b) {
    if (a->theta_dbm != b->theta_dbm) return a->theta_dbm > b->theta_dbm;
    return a->band_id < b->band_id;
  });
  std::vector<BandId> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(usable[static_cast<std::size_t>(i)]->band_id);
  return out;
}

}  // namespace rps
