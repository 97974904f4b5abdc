#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sonalign::cfg {

// Declarative `key = value` files with optional `[section]` headers and
// `#` comments. Keys outside any section land in section "".
struct Config {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
};

Config parse_config(const std::string& text, const std::string& origin = "<string>");
Config load_config(const std::string& path);

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& value);  // comma-separated, trimmed

}  // namespace sonalign::cfg
