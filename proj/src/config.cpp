// SPDX-License-Identifier: Apache-2.0
#include "sagc/config.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <set>

#include "sagc/errors.hpp"

namespace sagc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename N>
N parse_number(const ConfigEntry& e, std::string_view text) {
  N v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) config_fail(e, "cannot parse '" + std::string(text) + "'");
  return v;
}

}  // namespace

void config_fail(const ConfigEntry& e, const std::string& message) {
  throw ConfigError("line " + std::to_string(e.line) + ": key '" + e.key + "': " + message);
}

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" + std::string(line) + "'");
    }
    ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(e.key).second) config_fail(e, "duplicate key");
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t config_size(const ConfigEntry& e) { return parse_number<std::size_t>(e, e.value); }

std::uint64_t config_u64(const ConfigEntry& e) { return parse_number<std::uint64_t>(e, e.value); }

double config_real(const ConfigEntry& e) { return parse_number<double>(e, e.value); }

bool config_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  config_fail(e, "expected true or false, got '" + e.value + "'");
}

std::vector<std::size_t> config_size_list(const ConfigEntry& e) {
  std::vector<std::size_t> out;
  std::string_view rest = e.value;
  if (rest.empty()) return out;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_number<std::size_t>(e, trim(rest.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_size_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace sagc
