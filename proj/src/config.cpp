// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rps/error.hpp"

namespace rps {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string describe(const KeyValueEntry& e) {
  return "config key '" + e.key + "' (line " + std::to_string(e.line) + ")";
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ',' || text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ',' && text[end] != ' ' && text[end] != '\t') ++end;
    const std::string_view token = text.substr(pos, end - pos);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ConfigError("not a number: '" + std::string(token) + "'");
    }
    out.push_back(v);
    pos = end;
  }
  return out;
}

KeyValueFile KeyValueFile::parse(std::istream& in) {
  KeyValueFile file;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string_view key = trim(view.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    file.entries_.push_back(
        KeyValueEntry{std::string(key), std::string(trim(view.substr(eq + 1))), number});
  }
  return file;
}

KeyValueFile KeyValueFile::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse(in);
}

const KeyValueEntry* KeyValueFile::last(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

bool KeyValueFile::contains(std::string_view key) const { return last(key) != nullptr; }

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
  const auto* e = last(key);
  if (e == nullptr) return std::nullopt;
  return e->value;
}

std::vector<std::string> KeyValueFile::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.key == key) out.push_back(e.value);
  }
  return out;
}

double KeyValueFile::get_double(std::string_view key, double fallback) const {
  const auto* e = last(key);
  if (e == nullptr) return fallback;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
  if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
    throw ConfigError(describe(*e) + ": expected a number, got '" + e->value + "'");
  }
  return v;
}

long long KeyValueFile::get_int(std::string_view key, long long fallback) const {
  const auto* e = last(key);
  if (e == nullptr) return fallback;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
  if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
    throw ConfigError(describe(*e) + ": expected an integer, got '" + e->value + "'");
  }
  return v;
}

bool KeyValueFile::get_bool(std::string_view key, bool fallback) const {
  const auto* e = last(key);
  if (e == nullptr) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(describe(*e) + ": expected a boolean, got '" + e->value + "'");
}

std::string KeyValueFile::get_string(std::string_view key, std::string fallback) const {
  const auto* e = last(key);
  return e == nullptr ? fallback : e->value;
}

std::vector<double> KeyValueFile::get_doubles(std::string_view key,
                                              std::vector<double> fallback) const {
  const auto* e = last(key);
  if (e == nullptr) return fallback;
  try {
    return parse_number_list(e->value);
  } catch (const ConfigError& err) {
    throw ConfigError(describe(*e) + ": " + err.what());
  }
}

void KeyValueFile::reject_unknown(std::span<const std::string_view> known) const {
  for (const auto& e : entries_) {
    if (std::find(known.begin(), known.end(), e.key) == known.end()) {
      throw ConfigError("unknown " + describe(e));
    }
  }
}

void KeyValueFile::set(std::string key, std::string value) {
  entries_.push_back(KeyValueEntry{std::move(key), std::move(value), 0});
}

}  // namespace rps
