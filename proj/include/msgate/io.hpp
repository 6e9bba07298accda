#pragma once

// Flat key-value run configuration with [scheme] sections, and small CSV
// helpers shared by the command-line front-end and the demos.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "envelope.hpp"
#include "solver.hpp"

namespace msgate {

using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
  KeyValues globals;
  std::vector<KeyValues> schemes;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline const std::string* find_key(const RunConfig& cfg, const KeyValues* scheme,
                                   const std::string& key) {
  if (scheme) {
    auto it = scheme->find(key);
    if (it != scheme->end()) return &it->second;
  }
  auto it = cfg.globals.find(key);
  if (it != cfg.globals.end()) return &it->second;
  return nullptr;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  KeyValues* current = &cfg.globals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[scheme]")
        throw invalid_parameter("config line " + std::to_string(lineno) +
                                ": only [scheme] sections are supported");
      cfg.schemes.emplace_back();
      current = &cfg.schemes.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_parameter("config line " + std::to_string(lineno) +
                              ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw invalid_parameter("config line " + std::to_string(lineno) + ": empty key");
    (*current)[key] = value;
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_parameter("cannot open config file: " + path);
  return parse_config(in);
}

inline std::string config_string(const RunConfig& cfg, const KeyValues* scheme,
                                 const std::string& key, const std::string& fallback) {
  const std::string* v = detail::find_key(cfg, scheme, key);
  return v ? *v : fallback;
}

inline double config_double(const RunConfig& cfg, const KeyValues* scheme,
                            const std::string& key, double fallback) {
  const std::string* v = detail::find_key(cfg, scheme, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw invalid_parameter("config key '" + key + "': not a number: " + *v);
  }
}

inline long long config_int(const RunConfig& cfg, const KeyValues* scheme,
                            const std::string& key, long long fallback) {
  const std::string* v = detail::find_key(cfg, scheme, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    long long i = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return i;
  } catch (const std::exception&) {
    throw invalid_parameter("config key '" + key + "': not an integer: " + *v);
  }
}

inline bool config_bool(const RunConfig& cfg, const KeyValues* scheme,
                        const std::string& key, bool fallback) {
  const std::string* v = detail::find_key(cfg, scheme, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw invalid_parameter("config key '" + key + "': not a boolean: " + *v);
}

inline std::vector<double> config_list(const RunConfig& cfg, const std::string& key) {
  const std::string* v = detail::find_key(cfg, nullptr, key);
  std::vector<double> out;
  if (!v) return out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw invalid_parameter("config key '" + key + "': not a number list: " + *v);
    }
  }
  return out;
}

// Builds the gate solutions requested by the [scheme] sections.
inline std::vector<GateSolution> config_solutions(const RunConfig& cfg) {
  std::vector<GateSolution> sols;
  double omega = two_pi * config_double(cfg, nullptr, "omega_ms_hz", 1180.0);
  for (const KeyValues& s : cfg.schemes) {
    std::string kind = config_string(cfg, &s, "kind", "");
    if (kind == "sin2") {
      sols.push_back(solve_sin2(omega, static_cast<int>(config_int(cfg, &s, "k", 0))));
    } else if (kind == "square") {
      sols.push_back(
          solve_square(omega, static_cast<int>(config_int(cfg, &s, "loops", 0))));
    } else if (kind == "walsh") {
      int index = static_cast<int>(config_int(cfg, &s, "index", 0));
      int loops = static_cast<int>(
          config_int(cfg, &s, "loops", walsh_segment_count(index)));
      sols.push_back(solve_walsh(omega, loops, index));
    } else {
      throw invalid_parameter("scheme kind must be sin2, square, or walsh; got '" +
                              kind + "'");
    }
  }
  return sols;
}

// Shortest-round-trip decimal formatting, deterministic across runs.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_parameter("cannot open output file: " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

}  // namespace msgate
