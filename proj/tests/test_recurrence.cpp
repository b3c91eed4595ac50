#include <catch_amalgamated.hpp>

#include <set>

#include "artifact/recurrence.hpp"

using namespace artifact;

namespace {

// x' = x (1 - x^2) on [-2, 2]: sinks at +-1, source at 0.
std::shared_ptr<VectorFieldSpec> cubic_line() {
  auto A = std::make_shared<Atlas>("line");
  Chart c{"line", 1, Vec(1), Vec(1), 0};
  c.lo << -2.0;
  c.hi << 2.0;
  A->add_chart(c);
  auto F = std::make_shared<VectorFieldSpec>("cubic", A);
  F->set_rule("line", make_rule<1>([](const auto& z) {
                using T = typename std::decay_t<decltype(z)>::Scalar;
                Eigen::Matrix<T, 1, 1> o;
                o << z(0) * (1.0 - z(0) * z(0));
                return o;
              }));
  return F;
}

RegionSpec interval(double a, double b) {
  Vec lo(1), hi(1);
  lo << a;
  hi << b;
  return RegionSpec{{RegionBox{"line", lo, hi, {}}}};
}

}  // namespace

TEST_CASE("Tarjan finds the components of a known graph") {
  // 0 -> 1 -> 2 -> 0, 2 -> 3, 3 -> 4 -> 3, 5 isolated
  std::vector<std::vector<int>> adj{{1}, {2}, {0, 3}, {4}, {3}, {}};
  auto scc = tarjan_scc(adj);
  CHECK(scc[0] == scc[1]);
  CHECK(scc[1] == scc[2]);
  CHECK(scc[3] == scc[4]);
  CHECK(scc[0] != scc[3]);
  CHECK(scc[5] != scc[0]);
  CHECK(scc[5] != scc[3]);
}

TEST_CASE("Tarjan handles a long chain without recursion") {
  const int n = 200000;
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i + 1 < n; ++i) adj[i].push_back(i + 1);
  adj[n - 1].push_back(0);
  auto scc = tarjan_scc(adj);
  CHECK(std::set<int>(scc.begin(), scc.end()).size() == 1);
}

TEST_CASE("chain classes of the cubic line are its three zeros") {
  auto F = cubic_line();
  BoxGraph g = build_box_graph(*F, interval(-2, 2), 0.02, 5.0, 0.01);
  auto cls = chain_classes(g);
  REQUIRE(cls.size() == 3);
  CHECK(cls[0].representative.x(0) == Catch::Approx(-1.0).margin(0.05));
  CHECK(cls[1].representative.x(0) == Catch::Approx(0.0).margin(0.05));
  CHECK(cls[2].representative.x(0) == Catch::Approx(1.0).margin(0.05));
  auto near = g.boxes_near({"line", Vec::Constant(1, 0.999)}, 0.0);
  REQUIRE_FALSE(near.empty());
  CHECK(class_index_of(cls, near.front()) == 2);
}

TEST_CASE("graph JSON export reloads with identical SCC labels") {
  auto F = cubic_line();
  BoxGraph g = build_box_graph(*F, interval(-2, 2), 0.05, 5.0, 0.01);
  BoxGraph h = graph_from_json(json::parse(graph_to_json(g).dump()));
  CHECK(h.nboxes == g.nboxes);
  CHECK(h.adj == g.adj);
  CHECK(h.scc == g.scc);
  CHECK(chain_classes(h).size() == chain_classes(g).size());
}

TEST_CASE("graph construction does not depend on the thread count") {
  auto F = cubic_line();
  GraphOptions one, four;
  one.threads = 1;
  four.threads = 4;
  BoxGraph a = build_box_graph(*F, interval(-2, 2), 0.05, 5.0, 0.01, -1, one);
  BoxGraph b = build_box_graph(*F, interval(-2, 2), 0.05, 5.0, 0.01, -1, four);
  CHECK(a.adj == b.adj);
  CHECK(graph_to_json(a).dump() == graph_to_json(b).dump());
}

TEST_CASE("attracting region certificates") {
  auto F = cubic_line();
  CHECK(is_attracting_region(*F, interval(0.5, 1.5), 5.0).attracting);
  CHECK_FALSE(is_attracting_region(*F, interval(-0.5, 0.5), 5.0).attracting);
  CHECK(is_attracting_region(*F->negated(), interval(-0.5, 0.5), 5.0).attracting);
}

TEST_CASE("filtrating neighborhood needs both certificates") {
  auto F = cubic_line();
  RegionSpec Va = interval(0.5, 1.5), Vr = interval(-0.5, 1.2);
  auto ca = is_attracting_region(*F, Va, 5.0);
  auto cr = is_attracting_region(*F->negated(), Vr, 5.0);
  CHECK_THROWS_AS(filtrating_neighborhood(Va, ca, Vr, cr), Error);
}

TEST_CASE("maximal invariant boxes and their fattening") {
  auto F = cubic_line();
  BoxGraph g = build_box_graph(*F, interval(-2, 2), 0.02, 5.0, 0.01);
  auto inv = maximal_invariant_boxes(g, 50);
  REQUIRE_FALSE(inv.empty());
  for (int id : inv) CHECK(std::abs(g.center(id).x(0)) <= 1.1);
  auto fat = fatten_boxes(g, inv, 5);
  CHECK(fat.size() >= inv.size());
  CHECK(std::includes(fat.begin(), fat.end(), inv.begin(), inv.end()));
  auto one = fatten_boxes(g, {inv.front()}, 5);
  CHECK(one.size() <= 11);
}

TEST_CASE("regions outside the atlas are rejected") {
  auto F = cubic_line();
  Vec lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  RegionSpec R{{RegionBox{"nowhere", lo, hi, {}}}};
  CHECK_THROWS_AS(build_box_graph(*F, R, 0.05, 5.0, 0.01), Error);
}
