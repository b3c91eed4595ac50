#include <catch_amalgamated.hpp>

#include "artifact/verification.hpp"
#include "laws.hpp"

using namespace artifact;

TEST_CASE("cocycle laws hold on the Lorenz piece") {
  auto F = build_lorenz(LorenzParams{});
  auto e = testing_support::cocycle_laws(*F, 40, 21);
  CHECK(e.semigroup <= 1e-6);
  CHECK(e.derivative <= 1e-6);
  CHECK(e.psi_n <= 1e-6);
  CHECK(e.h_relation <= 1e-6);
  CHECK(e.psi <= 1e-6);
}

TEST_CASE("cocycle laws hold on the RP2 field") {
  auto Y = build_rp2_field(RP2Params{});
  auto e = testing_support::cocycle_laws(*Y, 30, 22, 0.5);
  CHECK(e.worst() <= 1e-6);
}

TEST_CASE("canonical lines and normal frames") {
  Vec v(3);
  v << -1.0, 2.0, 0.5;
  Vec c = canonical_line(v), d = canonical_line(-v);
  CHECK((c - d).norm() == 0.0);
  CHECK(c.norm() == Catch::Approx(1.0));
  Mat N = normal_frame(c);
  CHECK((N.transpose() * N - Mat::Identity(2, 2)).norm() <= 1e-12);
  CHECK((N.transpose() * c).norm() <= 1e-12);
}

TEST_CASE("frames stay orthonormal along long segments") {
  auto F = build_lorenz(LorenzParams{});
  LineElement le(cube_point("a_", 0.3, 0.5, 0.1), Vec::Ones(3));
  CocycleSegment s = extended_lpf(*F, le, 10.0);
  CHECK(frame_error(s) <= 1e-10);
}

TEST_CASE("the linear Poincare flow refuses near-singular points") {
  auto F = build_lorenz(LorenzParams{});
  try {
    lpf(*F, cube_point("a_", 0.0, 0.0, 0.0), 1.0);
    FAIL("expected NearSingularity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NearSingularity);
  }
}

TEST_CASE("Psi at the unstable eigenline of sigma_a is diag(e^{0.7t}, e^{-2.8t})") {
  // independent oracle: lambda1 + lambda3 and lambda1 + lambda2 for (1.7, -1, -4.5)
  auto F = build_lorenz(LorenzParams{});
  const auto& s = F->singularity("sigma_a");
  for (double T : {0.5, 1.0, 3.0}) {
    LineRates r = singular_line_rates(*F, s, 2, T);
    REQUIRE(r.measured.size() == 2);
    CHECK(r.measured[0] == Catch::Approx(0.7).margin(1e-6));
    CHECK(r.measured[1] == Catch::Approx(-2.8).margin(1e-6));
  }
  LineRates w = singular_line_rates(*F, s, 1, 1.0);
  CHECK(w.measured[0] == Catch::Approx(0.7).margin(1e-6));
  CHECK(w.measured[1] == Catch::Approx(-5.5).margin(1e-6));
}

TEST_CASE("Lyapunov spectrum of a linear saddle is its eigenvalues") {
  auto F = build_lorenz(LorenzParams{});
  Spectrum sp = lyapunov_spectrum(*F, cube_point("a_", 0.0, 0.0, 0.0), 5.0);
  REQUIRE(sp.exponents.size() == 3);
  CHECK(sp.exponents[0] == Catch::Approx(1.7).margin(1e-8));
  CHECK(sp.exponents[1] == Catch::Approx(-1.0).margin(1e-8));
  CHECK(sp.exponents[2] == Catch::Approx(-4.5).margin(1e-8));
}

TEST_CASE("principal angles") {
  Mat A = Mat::Identity(3, 3).leftCols(1), B = Mat::Identity(3, 3).rightCols(1);
  CHECK(principal_angles(A, A)[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(principal_angles(A, B)[0] == Catch::Approx(kPi / 2));
}
