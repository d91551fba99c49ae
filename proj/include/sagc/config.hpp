// SPDX-License-Identifier: Apache-2.0
//
// Plain-text configuration: one `key = value` per line, `#` starts a
// comment, blank lines are ignored. Keys are matched exactly; any key the
// consumer does not recognise is an error naming its line.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sagc {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// ConfigError on a malformed or duplicated line, naming the line number.
std::vector<ConfigEntry> parse_config_text(std::string_view text);

/// Typed value readers; ConfigError names the entry's key and line.
std::size_t config_size(const ConfigEntry& e);
std::uint64_t config_u64(const ConfigEntry& e);
double config_real(const ConfigEntry& e);
bool config_bool(const ConfigEntry& e);
/// Comma-separated unsigned integers, e.g. "3,6,12"; empty for "".
std::vector<std::size_t> config_size_list(const ConfigEntry& e);

/// "line N: key 'k': message"
[[noreturn]] void config_fail(const ConfigEntry& e, const std::string& message);

std::string format_real(double v);
std::string format_size_list(const std::vector<std::size_t>& v);

}  // namespace sagc
