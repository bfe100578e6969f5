#include "rega/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "rega/error.hpp"

namespace rega {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return from_string(ss.str());
  } catch (const ValueError& e) {
    throw ValueError(std::string(e.what()) + " (in " + path + ")");
  }
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValueError("config: line " + std::to_string(lineno) + " has no '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValueError("config: line " + std::to_string(lineno) + " has empty key");
    cfg.pairs_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { pairs_[key] = value; }

bool Config::has(const std::string& key) const { return pairs_.count(key) != 0; }

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto it = pairs_.find(key);
  return it == pairs_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = pairs_.find(key);
  if (it == pairs_.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ValueError("config: " + key + " is not a number: '" + it->second + "'");
  }
  if (used != it->second.size())
    throw ValueError("config: " + key + " is not a number: '" + it->second + "'");
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = pairs_.find(key);
  if (it == pairs_.end()) return fallback;
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(it->second, &used);
  } catch (const std::exception&) {
    throw ValueError("config: " + key + " is not an integer: '" + it->second + "'");
  }
  if (used != it->second.size())
    throw ValueError("config: " + key + " is not an integer: '" + it->second + "'");
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = pairs_.find(key);
  if (it == pairs_.end()) return fallback;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    throw ValueError("config: " + key + " is not an unsigned integer: '" + it->second + "'");
  }
  if (used != it->second.size())
    throw ValueError("config: " + key + " is not an unsigned integer: '" + it->second + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = pairs_.find(key);
  if (it == pairs_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ValueError("config: " + key + " is not a boolean: '" + it->second + "'");
}

std::vector<std::string> Config::get_str_list(const std::string& key) const {
  auto it = pairs_.find(key);
  std::vector<std::string> out;
  if (it == pairs_.end() || it->second.empty()) return out;
  std::istringstream ss(it->second);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const std::string& part : get_str_list(key)) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ValueError("config: " + key + " has non-integer element '" + part + "'");
    }
  }
  return out;
}

void Config::require_known(const std::vector<std::string>& known) const {
  std::string bad;
  for (const auto& [key, value] : pairs_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      if (!bad.empty()) bad += ", ";
      bad += key;
    }
  }
  if (!bad.empty()) throw ValueError("config: unknown keys: " + bad);
}

}  // namespace rega
