#include "toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace padapt::cli {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument("config parse error at line " + std::to_string(line) + ": " +
                              what);
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment, respecting double quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::string parse_scalar(const std::string& raw, int line) {
  std::string v = strip(raw);
  if (v.empty()) fail(line, "empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
    return v.substr(1, v.size() - 2);
  }
  return v;
}

std::vector<std::string> parse_array(const std::string& raw, int line) {
  std::string v = strip(raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') fail(line, "malformed array");
  std::vector<std::string> out;
  std::string body = v.substr(1, v.size() - 2);
  std::string item;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(parse_scalar(item, line));
      item.clear();
    } else {
      item += c;
    }
  }
  if (!strip(item).empty()) out.push_back(parse_scalar(item, line));
  if (out.empty()) fail(line, "empty array");
  return out;
}

std::string parse_key(const std::string& raw, int line) {
  std::string k = strip(raw);
  if (k.empty()) fail(line, "empty key");
  if (k.front() == '"') {
    if (k.size() < 2 || k.back() != '"') fail(line, "unterminated quoted key");
    return k.substr(1, k.size() - 2);
  }
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-') {
      fail(line, "invalid key character '" + std::string(1, c) + "'");
    }
  }
  return k;
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
  std::vector<ConfigEntry> entries;
  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = strip(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = strip(line.substr(1, line.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    ConfigEntry entry;
    entry.line = line_no;
    const std::string key = parse_key(line.substr(0, eq), line_no);
    entry.key = section.empty() ? key : section + "." + key;
    const std::string value = strip(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      entry.is_array = true;
      entry.array = parse_array(value, line_no);
    } else {
      entry.value = parse_scalar(value, line_no);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << f.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace padapt::cli
