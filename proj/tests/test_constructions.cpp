#include <catch_amalgamated.hpp>

#include "artifact/hmap.hpp"
#include "artifact/m5.hpp"
#include "artifact/plug_crossing.hpp"
#include "artifact/rp2.hpp"
#include "artifact/s3.hpp"

using namespace artifact;

TEST_CASE("default parameter sets pass their build checks") {
  CHECK(LorenzParams{}.checks().pass());
  CHECK(PlugParams{}.checks().pass());
  CHECK(RP2Params{}.checks().pass());
  CHECK(HParams{}.checks().pass());
}

TEST_CASE("Lorenz bounds name the violated inequality") {
  auto first = [](LorenzParams p) { return std::string(p.checks().first_failure()->name); };
  LorenzParams p;
  p.l1 = 2.5;
  CHECK(first(p) == "lambda1 < 2");
  p = {};
  p.l1 = 1.3;
  CHECK(first(p) == "sqrt(2) < lambda1");
  p = {};
  p.l2 = -5.5;
  CHECK(first(p) == "-lambda2 < 5");
  p = {};
  p.l3 = -1.8;
  CHECK(first(p) == "-lambda3 < lambda1");
  CHECK_THROWS_AS(build_lorenz(p), Error);
  CHECK_NOTHROW(build_lorenz(p, false));
}

TEST_CASE("the return map is uniformly expanding and maps into the section") {
  LorenzParams p;
  for (int i = 1; i < 200; ++i) {
    double x = (1.0 - p.zeta) * i / 200.0;
    CHECK(p.return_slope(x) >= std::sqrt(2.0));
    CHECK(std::abs(p.return_x(x)) <= 1.0 - p.zeta + 1e-12);
  }
}

TEST_CASE("RP2 curve endpoints close and the field has one saddle, sink and source") {
  RP2Params P;
  auto k = P.constants();
  CHECK(k.a_prime == Catch::Approx(P.a).epsilon(1e-12));
  CHECK(k.b == Catch::Approx(P.a).epsilon(1e-12));
  auto Y = build_rp2_field(P);
  CHECK(Y->singularity("s").s_index == 1);
  CHECK(Y->singularity("omega").s_index == 2);
  CHECK(Y->singularity("alpha").s_index == 0);
  P.lambda_uuu = 5.0;
  CHECK_FALSE(P.checks().pass());
}

TEST_CASE("the plug quotient is symmetric under y -> -y with time reversal") {
  PlugParams P;
  auto Q = build_plug_quotient(P);
  for (double s : {0.2, 0.5, 0.9, 1.3}) {
    for (double y : {0.1, 0.4, 0.85}) {
      Vec a(2), b(2);
      a << s, y;
      b << s, -y;
      Vec fa = Q->eval({"quot", a}), fb = Q->eval({"quot", b});
      CHECK(fa(0) == Catch::Approx(-fb(0)).margin(1e-12));
      CHECK(fa(1) == Catch::Approx(fb(1)).margin(1e-12));
    }
  }
}

TEST_CASE("the entry annulus boundary is bracketed by crossing and non-crossing orbits") {
  PlugCrossing pc = build_plug_crossing(PlugParams{});
  CHECK(pc.c0 > 0.0);
  CHECK(pc.c0 < 1.0);
  CHECK(plug_orbit_crosses(*pc.quotient, pc.c0 + 1e-3, 400.0));
  CHECK_FALSE(plug_orbit_crosses(*pc.quotient, pc.c0 - 1e-3, 400.0));
}

TEST_CASE("crossing map outside the annulus is a NoCrossing error") {
  PlugCrossing pc = build_plug_crossing(PlugParams{});
  try {
    crossing_map_P(pc, 0.0, 1.5);
    FAIL("expected NoCrossing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCrossing);
  }
}

TEST_CASE("H bump satisfies its anchor values") {
  HParams H;
  CHECK(H.h(0.0) == Catch::Approx(0.25 * H.eps));
  CHECK(H.h(0.6) == 0.0);
  CHECK(H.h(-0.6) == 0.0);
  CHECK(H.g_cube(H.p_pt()) == Catch::Approx(-0.25 * H.eps));
  CHECK(isotopy_endpoint_error(H, false) <= 1e-6);
}

TEST_CASE("shifted Z_H rejects shifts above the bound") {
  M5Params P;
  CHECK_THROWS_AS(build_ZHeps(P, 0.3), Error);
  CHECK_NOTHROW(build_ZHeps(P, 0.05));
}

TEST_CASE("S3 gluing report passes on defaults") {
  GlueResult g = glue_S3(PlugParams{}, LorenzParams{}, true, 16);
  CHECK(g.report.pass());
  for (double a : g.foliation_angles) CHECK(a >= 1e-3);
}
