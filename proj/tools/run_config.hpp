#pragma once

// Flat key = value config files for the CLI. '#' starts a comment; keys match
// the command option names. Unknown keys are rejected so typos surface early.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isotone_cli {

// Thrown for anything wrong with user input (files, configs, CSV contents).
// The CLI maps it to exit code 2; other exceptions exit 3.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KvConfig {
 public:
  static KvConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    KvConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw input_error("config line " + std::to_string(lineno) +
                          ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw input_error("config line " + std::to_string(lineno) +
                          ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_int(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw input_error("config key '" + key + "': bad unsigned integer '" +
                        it->second + "'");
    }
  }

  std::vector<long long> get_int_list(const std::string& key) const {
    std::vector<long long> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& item : split_list(it->second)) {
      out.push_back(parse_int(key, item));
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& item : split_list(it->second)) {
      out.push_back(parse_double(key, item));
    }
    return out;
  }

  void require_known_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (!known.count(key)) {
        throw input_error("unknown config key '" + key + "'");
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw input_error("config key '" + key + "': bad number '" + v + "'");
    }
  }

  static long long parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw input_error("config key '" + key + "': bad integer '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace isotone_cli
