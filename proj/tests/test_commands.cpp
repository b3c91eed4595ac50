#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "artifact/commands.hpp"

using namespace artifact;

namespace {

RunConfig make(const std::string& cmd, const std::string& target) {
  RunConfig c;
  c.command = cmd;
  c.target = target;
  return c;
}

std::string export_text(const RunConfig& c) {
  std::ostringstream os;
  cmd_export(c, os);
  return os.str();
}

size_t count_lines(const std::string& s) { return size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("reports carry the stable top-level schema") {
  RunConfig c = make("field build", "lorenz");
  json r = make_report(c, cmd_field_build(c));
  for (const char* k : {"command", "config", "results", "margins", "pass"}) CHECK(r.contains(k));
  CHECK(r["pass"] == true);
}

TEST_CASE("field build with lambda1 = 2.5 names the violated bound") {
  RunConfig c = make("field build", "lorenz");
  c.overrides["lambda1"] = 2.5;
  Verdict v = cmd_field_build(c);
  CHECK_FALSE(v.pass);
  CHECK(v.results["violated"] == "lorenz: lambda1 < 2");
}

TEST_CASE("parameter files feed the builders") {
  const std::string path = "test_commands_params.txt";
  {
    std::ofstream f(path);
    f << "lambda1 = 2.5\n";
  }
  RunConfig c = make("field build", "lorenz");
  c.params_path = path;
  CHECK_FALSE(cmd_field_build(c).pass);
  c.params_path = "does_not_exist.txt";
  try {
    cmd_field_build(c);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.kind()) == 2);
  }
}

TEST_CASE("negative controls flip every build verdict") {
  for (const char* name : {"lorenz", "plug", "rp2", "h", "m5"}) {
    INFO(name);
    RunConfig c = make("field build", name);
    CHECK(cmd_field_build(c).pass);
    c.negative_control = true;
    CHECK_FALSE(cmd_field_build(c).pass);
  }
}

TEST_CASE("quick verify targets and their negative controls") {
  for (const char* t : {"lorenz", "h", "rp2"}) {
    INFO(t);
    RunConfig c = make("verify", t);
    CHECK(cmd_verify(c).pass);
    c.negative_control = true;
    CHECK_FALSE(cmd_verify(c).pass);
  }
}

TEST_CASE("crossing-map export over a 64x64 grid has 4096 rows") {
  RunConfig c = make("export", "crossing-map");
  c.format = "csv";
  std::string s = export_text(c);
  CHECK(s.rfind("theta,r,theta_prime,r_prime,tau\n", 0) == 0);
  CHECK(count_lines(s) == 4097);
}

TEST_CASE("graph export reloads into the same chain classes") {
  RunConfig c = make("export", "graph");
  c.delta = 0.05;
  json j = json::parse(export_text(c));
  BoxGraph g = graph_from_json(j);
  CHECK(g.scc == j["scc"].get<std::vector<int>>());
  c.format = "csv";
  std::string csv = export_text(c);
  CHECK(count_lines(csv) == chain_classes(g).size() + 1);
}

TEST_CASE("trajectory and spectrum exports") {
  RunConfig c = make("export", "trajectory");
  c.format = "csv";
  c.t_max = 2.0;
  std::string s = export_text(c);
  CHECK(s.rfind("t,chart,c0,c1,c2,event\n", 0) == 0);
  c.target = "spectrum";
  c.t_max = 5.0;
  s = export_text(c);
  CHECK(s.rfind("t,l0,l1,l2\n", 0) == 0);
  CHECK(count_lines(s) == 6);
}

TEST_CASE("schema-impossible exports are config errors") {
  RunConfig c = make("export", "crossing-map");
  c.field = "rp2";
  CHECK_THROWS_AS(export_text(c), Error);
  c = make("export", "spectrum");
  c.field = "torus";
  CHECK_THROWS_AS(export_text(c), Error);
}

TEST_CASE("outputs are identical at 1, 4 and 8 threads") {
  std::vector<std::string> outs;
  for (int t : {1, 4, 8}) {
    thread_count() = t;
    RunConfig v = make("verify", "rp2");
    RunConfig e = make("export", "crossing-map");
    e.grid = 12;
    outs.push_back(make_report(v, cmd_verify(v)).dump() + export_text(e));
  }
  thread_count() = 0;
  CHECK(outs[0] == outs[1]);
  CHECK(outs[0] == outs[2]);
}
