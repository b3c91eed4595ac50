#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "artifact/core.hpp"

namespace artifact {

// Plain key = value parameter file. '#' starts a comment.
struct ParamFile {
  std::map<std::string, double> values;

  double get(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }
};

inline ParamFile parse_params(std::istream& in, const std::string& origin = "<stream>") {
  ParamFile pf;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto eq = line.find('=');
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    try {
      size_t used = 0;
      double v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      pf.values[key] = v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, origin + ":" + std::to_string(lineno) + ": bad number '" + val + "'");
    }
  }
  return pf;
}

inline ParamFile load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open parameter file " + path);
  return parse_params(in, path);
}

}  // namespace artifact
