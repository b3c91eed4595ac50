#include <catch_amalgamated.hpp>

#include "artifact/verification.hpp"
#include "artifact/verification_m5.hpp"
#include "artifact/verification_plug.hpp"

using namespace artifact;

TEST_CASE("strong Lorenz-like predicate") {
  CHECK(strong_lorenz_like({1.7, -1.0, -4.5}));
  CHECK(strong_lorenz_like({-1.7, 1.0, 4.5}));  // time reversed
  CHECK_FALSE(strong_lorenz_like({1.7, -1.8, -4.5}));
  CHECK_FALSE(strong_lorenz_like({1.7, -1.0, -1.5}));
  CHECK_FALSE(strong_lorenz_like({1.7, 1.0, 4.5}));
  CHECK_THROWS_AS(strong_lorenz_like(std::vector<double>{1.7, -1.0}), Error);
  CHECK_THROWS_AS(strong_lorenz_like({1.7, 0.0, -4.5}), Error);
}

TEST_CASE("disc offsets lie in the punctured disc of the given span") {
  Mat V = Mat::Identity(3, 3).leftCols(2);
  for (const Vec& d : disc_offsets(V, 1e-3, 64)) {
    CHECK(d.norm() <= 1e-3 + 1e-15);
    CHECK(d.norm() > 0.0);
    CHECK(d(2) == 0.0);
  }
}

TEST_CASE("strong discs of sigma_a and sigma_r escape on S3") {
  auto X = build_S3_field(LorenzParams{});
  auto ea = escaping_check(*X, X->singularity("sigma_a"), true, 1, kEscapeRadius, kEscapeTmax, 24);
  auto er = escaping_check(*X, X->singularity("sigma_r"), false, 1, kEscapeRadius, kEscapeTmax, 24);
  CHECK(ea.pass);
  CHECK(er.pass);
  CHECK(ea.max_time > 0.0);
}

TEST_CASE("certify_rates measures margins at one index") {
  std::vector<ElementRates> els{{"periodic a", {0.5, -1.0}, 1}, {"center", {0.7, -2.8}, 1}};
  MSHCertificate c = certify_rates(els, 5.0);
  CHECK(c.s_index == 1);
  CHECK(c.pass);
  CHECK(c.contraction_margin == Catch::Approx(1.0));
  CHECK(c.expansion_margin == Catch::Approx(0.5));
  els.push_back({"center bad", {-0.1, -2.8}, 2});
  MSHCertificate d = certify_rates(els, 5.0);
  CHECK_FALSE(d.index_uniform);
  CHECK(d.expansion_margin == Catch::Approx(-0.1));
  CHECK_FALSE(d.pass);
}

TEST_CASE("RP2 crossings match the lemma on a few points") {
  RP2Params P;
  auto Y = build_rp2_field(P);
  for (double l : {0.5, 0.05, -0.05, -0.5}) {
    RP2Orbit o = rp2_classify(*Y, P, l, 100.0);
    INFO("l = " << l);
    CHECK(o.ok);
    CHECK(o.omega == "omega");
    CHECK(o.alpha == "alpha");
  }
  auto Z = Y->negated();
  CHECK_FALSE(rp2_classify(*Z, P, 0.5, 100.0).ok);
}

TEST_CASE("annulus points cross and disc points do not (small sample)") {
  PlugCrossing pc = build_plug_crossing(PlugParams{});
  AnnulusCrossing a = annulus_crossing(pc, 24);
  CHECK(a.pass);
}

TEST_CASE("crossing-map grid has n^2 rows in the exit annulus") {
  PlugCrossing pc = build_plug_crossing(PlugParams{});
  auto rows = crossing_map_grid(pc, 4);
  CHECK(rows.size() == 16);
  for (auto& r : rows) {
    CHECK(r.r1 > 0.0);
    CHECK(r.r1 < 1.0);
    CHECK(r.tau > 0.0);
  }
}

TEST_CASE("radical inverse") {
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(2, 2) == 0.25);
  CHECK(radical_inverse(3, 2) == 0.75);
  CHECK(radical_inverse(1, 3) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("M5 classification on a small sample is dominated by escapes") {
  auto S = build_ZH(M5Params{});
  M5Classification c = m5_orbit_classification(*S, 40, 100.0, 1);
  CHECK(c.samples.size() == 40);
  CHECK(c.p_stays);
  CHECK(c.escaping_fraction >= 0.9);
}

TEST_CASE("cone transversality and its collinear control") {
  M5Params P;
  CHECK(m5_cone_transversality(*build_ZH(P)).report.pass);
  P.h.turn = kPi;
  P.h.tilt = 0.0;
  CHECK_FALSE(m5_cone_transversality(*build_ZH(P, false)).report.pass);
}
