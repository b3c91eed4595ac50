#include <catch_amalgamated.hpp>

#include <sstream>

#include "artifact/dynamics.hpp"
#include "support.hpp"

using namespace artifact;

namespace {

// Closed-form linear flow x(t) = exp(diag(rates) t) x0, componentwise.
double max_rel_error_linear(const VectorFieldSpec& f, const ChartPoint& x0, const std::vector<double>& rates,
                            double T) {
  FlowOptions o;
  o.record = true;
  FlowResult r = Integrator(f).run(x0, T, o);
  REQUIRE_FALSE(r.exited);
  double worst = 0.0;
  for (size_t k = 0; k < r.traj.t.size(); ++k) {
    REQUIRE(r.traj.pts[k].chart == x0.chart);
    for (size_t i = 0; i < rates.size(); ++i) {
      double exact = x0.x(i) * std::exp(rates[i] * r.traj.t[k]);
      if (exact == 0.0) continue;
      worst = std::max(worst, std::abs(r.traj.pts[k].x(i) - exact) / std::abs(exact));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("linear cube of the Lorenz piece matches the exponential") {
  LorenzParams L;
  auto F = build_lorenz(L);
  CHECK(max_rel_error_linear(*F, cube_point("a_", 1e-4, 0.5, 0.5), {L.l1, L.l3, L.l2}, 5.0) <= 1e-8);
  auto R = build_lorenz_reversed(L);
  CHECK(max_rel_error_linear(*R, cube_point("r_", 0.5, 1e-3, 1e-10), {-L.l1, -L.l3, -L.l2}, 5.0) <= 1e-8);
}

TEST_CASE("linear saddle strip of RP2 matches the exponential") {
  RP2Params P;
  auto Y = build_rp2_field(P);
  Vec x(2);
  x << 1.5, 2e-18;
  CHECK(max_rel_error_linear(*Y, {"strip", x}, {-P.lambda_uuu, P.lambda_uuu}, 5.0) <= 1e-8);
}

TEST_CASE("flow semigroup on random points") {
  std::mt19937_64 rng(5);
  auto F = build_lorenz(LorenzParams{});
  Integrator I(*F);
  FlowOptions o;
  for (int k = 0; k < 20; ++k) {
    ChartPoint p = testing_support::random_point(*F, rng, 0.2);
    FlowResult a = I.run(p, 1.5, o);
    if (a.exited) continue;
    FlowResult b = I.run(I.run(p, 0.7, o).end, 0.8, o);
    ChartPoint q = F->atlas().transition(b.end, a.end.chart);
    CHECK((q.x - a.end.x).norm() <= 1e-7 * std::max(1.0, a.end.x.norm()));
  }
}

TEST_CASE("backward flow inverts forward flow") {
  auto F = build_lorenz(LorenzParams{});
  ChartPoint p = cube_point("a_", 0.3, 0.5, 0.1);
  FlowOptions o;
  FlowResult a = Integrator(*F).run(p, 0.8, o);
  FlowResult b = Integrator(*F).run(a.end, -0.8, o);
  ChartPoint q = F->atlas().transition(b.end, "a_cube");
  CHECK((q.x - p.x).norm() <= 1e-9);
  CHECK(b.t == Catch::Approx(-0.8));
}

TEST_CASE("section events are found with the requested orientation") {
  PlugParams P;
  auto Q = build_plug_quotient(P);
  double tau = 0.0;
  CHECK(plug_orbit_crosses(*Q, 1.0, 100.0, 5e-3, &tau));
  CHECK(tau > 0.0);
  SectionSpec sec = plug_exit_section("quot");
  sec.orientation = -1;
  FlowOptions o;
  o.section = &sec;
  Vec x(2);
  x << 1.0, -1.0;
  CHECK(Integrator(*Q).run({"quot", x}, 100.0, o).hits.empty());
}

TEST_CASE("leaving the atlas is reported as an exit event") {
  PlugParams P;
  auto Q = build_plug_quotient(P);
  Vec x(2);
  x << 1.0, 0.99;
  FlowResult r = Integrator(*Q).run({"quot", x}, 10.0, FlowOptions{});
  CHECK(r.exited);
  CHECK(r.t < 10.0);
}

TEST_CASE("exit through a face shared by overlapping charts") {
  // the pole charts of the plug overlap in an annulus and share the top face
  auto F = build_plug(PlugParams{});
  Vec x(3);
  x << 0.786277, -0.669525, 0.548678;
  FlowResult r = Integrator(*F).run({"plug_n", x}, 0.5, FlowOptions{});
  CHECK(r.exited);
  CHECK(r.end.x(2) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("trajectory CSV round-trips through its header format") {
  auto F = build_lorenz(LorenzParams{});
  FlowOptions o;
  o.record = true;
  o.dt = 1e-2;
  FlowResult r = Integrator(*F).run(cube_point("a_", 0.3, 0.5, 0.1), 3.0, o);
  std::ostringstream os;
  write_trajectory_csv(os, r.traj);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,chart,c0,c1,c2,event");
  size_t rows = 0, events = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.push_back("");
    REQUIRE(cols.size() == 6);
    if (cols[5].empty()) {
      const ChartPoint& p = r.traj.pts[rows];
      CHECK(std::stod(cols[0]) == r.traj.t[rows]);
      CHECK(cols[1] == p.chart);
      for (int i = 0; i < 3; ++i) CHECK(std::stod(cols[2 + i]) == p.x(i));
      ++rows;
    } else {
      ++events;
    }
  }
  CHECK(rows == r.traj.pts.size());
  CHECK(events == r.traj.events.size());
  CHECK(events > 0);
}
