#pragma once

#include "json.hpp"

#include <string>
#include <vector>

#include "artifact/core.hpp"

namespace artifact {

using json = nlohmann::ordered_json;

struct Check {
  std::string name;
  double margin = 0.0;  // positive = satisfied
  bool pass = true;
};

struct BuildReport {
  std::string name;
  std::vector<Check> checks;

  void add(const std::string& n, double margin) { checks.push_back({n, margin, margin > 0.0}); }
  void add_bool(const std::string& n, bool ok, double margin) { checks.push_back({n, margin, ok}); }
  bool pass() const {
    for (auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const Check* first_failure() const {
    for (auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
  // Throws ParamOutOfRange naming the first violated check.
  void enforce(ErrorKind kind = ErrorKind::ParamOutOfRange) const {
    if (auto* c = first_failure()) throw Error(kind, name + ": " + c->name);
  }
  json to_json() const {
    json j;
    j["name"] = name;
    j["pass"] = pass();
    json arr = json::array();
    for (auto& c : checks) arr.push_back({{"check", c.name}, {"margin", c.margin}, {"pass", c.pass}});
    j["invariants"] = arr;
    return j;
  }
};

}  // namespace artifact
