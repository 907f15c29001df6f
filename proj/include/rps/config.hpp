// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat `key = value` text files. `#` starts a comment; keys may repeat and
// keep their file order (used for list-valued keys such as waypoints).

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rps {

struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile parse_string(std::string_view text);
  /// Unreadable file -> InputError.
  static KeyValueFile load(const std::filesystem::path& path);

  const std::vector<KeyValueEntry>& entries() const noexcept { return entries_; }
  bool contains(std::string_view key) const;
  /// Last value of a key.
  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;

  // Typed accessors; malformed values -> ConfigError naming key and line.
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

  /// ConfigError for the first key not in `known`.
  void reject_unknown(std::span<const std::string_view> known) const;

  void set(std::string key, std::string value);

 private:
  const KeyValueEntry* last(std::string_view key) const;
  std::vector<KeyValueEntry> entries_;
};

/// Comma- or whitespace-separated numbers. Malformed -> ConfigError.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace rps
