#include <catch_amalgamated.hpp>

#include <sstream>

#include "artifact/config.hpp"
#include "support.hpp"

using namespace artifact;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("parameter files parse key = value with comments") {
  std::istringstream in("# defaults\nlambda1 = 1.8\n\n  lambda3=-0.9  # weak\n");
  ParamFile pf = parse_params(in);
  CHECK(pf.get("lambda1", 0.0) == 1.8);
  CHECK(pf.get("lambda3", 0.0) == -0.9);
  CHECK(pf.get("missing", 7.0) == 7.0);
}

TEST_CASE("malformed parameter files are config errors") {
  std::istringstream no_eq("lambda1 1.8\n"), bad_num("lambda1 = 1.8x\n");
  CHECK_THROWS_WITH(parse_params(no_eq, "p"), ContainsSubstring("p:1"));
  CHECK_THROWS_AS(parse_params(bad_num), Error);
  try {
    load_params("/nonexistent/params.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}

TEST_CASE("bundled atlases glue consistently") {
  for (auto& b : testing_support::bundled_fields()) {
    INFO(b.name);
    GluingReport g = check_gluing(*b.f, 50);
    CHECK(g.max_mismatch <= 1e-8);
    CHECK(transition_roundtrip_error(b.f->atlas(), 50) <= 1e-9);
    if (!b.f->atlas().transitions().empty()) CHECK(min_transition_singular_value(b.f->atlas(), 50) > 0.0);
  }
}

TEST_CASE("analytic Jacobians agree with finite differences") {
  std::mt19937_64 rng(11);
  for (auto& b : testing_support::bundled_fields()) {
    INFO(b.name);
    for (int i = 0; i < 40; ++i) {
      ChartPoint p = testing_support::random_point(*b.f, rng);
      Mat J = b.f->jacobian(p), Jfd = b.f->jacobian_fd(p);
      CHECK((J - Jfd).norm() <= 1e-5 * std::max(1.0, J.norm()));
    }
  }
}

TEST_CASE("negated field reverses rates and swaps the index") {
  auto F = build_lorenz(LorenzParams{});
  auto G = F->negated();
  ChartPoint p = cube_point("a_", 0.2, 0.3, -0.4);
  CHECK((F->eval(p) + G->eval(p)).norm() == 0.0);
  const auto& s = F->singularity("sigma_a");
  const auto& t = G->singularity("sigma_a");
  CHECK(s.s_index == 2);
  CHECK(t.s_index == 1);
  CHECK(t.eigenvalues(0) == Catch::Approx(-s.eigenvalues(2)));
}

TEST_CASE("singularity analysis sorts eigenvalues ascending") {
  auto F = build_lorenz(LorenzParams{});
  const auto& s = F->singularity("sigma_a");
  CHECK(s.eigenvalues(0) == Catch::Approx(-4.5));
  CHECK(s.eigenvalues(1) == Catch::Approx(-1.0));
  CHECK(s.eigenvalues(2) == Catch::Approx(1.7));
}

TEST_CASE("points outside every chart are not relocated") {
  auto F = build_lorenz(LorenzParams{});
  Vec x(3);
  x << 50.0, 50.0, 50.0;
  CHECK_FALSE(F->atlas().relocate({"a_cube", x}).has_value());
}
