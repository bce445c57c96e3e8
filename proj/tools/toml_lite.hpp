#pragma once

#include <string>
#include <vector>

namespace padapt::cli {

// One parsed entry: section-qualified dotted key plus either a scalar or an
// array of scalars (kept as strings; the consumer knows the types).
struct ConfigEntry {
  std::string key;
  std::string value;
  std::vector<std::string> array;
  bool is_array = false;
  int line = 0;
};

// Minimal TOML subset: [section] / [section.sub] headers, key = value with
// bare or quoted keys, scalar values (number, "string", true/false) and
// single-line arrays. '#' starts a comment. Entries keep file order, which
// fixes the ablation grid's axis order.
std::vector<ConfigEntry> parse_config_file(const std::string& path);
std::vector<ConfigEntry> parse_config_text(const std::string& text);

}  // namespace padapt::cli
