#pragma once

#include <cmath>
#include <memory>

#include "artifact/lorenz.hpp"
#include "artifact/plug_crossing.hpp"
#include "artifact/report.hpp"

namespace artifact {

// X on S^3 as the disjoint union of the charted pieces: U_a (Lorenz region of
// sigma_a), U_r (its time-reversed copy around sigma_r) and, optionally, the
// plug S^2 x [-1, 1]. The passages between the pieces are declared through the
// annuli A_a ~ A_1 and A_r ~ A_0 rather than charted; an orbit leaving a piece
// ends in the "exterior" state.
inline std::shared_ptr<VectorFieldSpec> build_S3_field(const LorenzParams& L, const PlugParams* plug = nullptr,
                                                       bool check = true) {
  auto A = std::make_shared<Atlas>("S3");
  auto Fa = build_lorenz(L, check);
  auto Fr = build_lorenz_reversed(L, check);
  A->merge(Fa->atlas());
  A->merge(Fr->atlas());
  std::shared_ptr<VectorFieldSpec> Fp;
  if (plug) {
    Fp = build_plug(*plug, false, check);
    A->merge(Fp->atlas());
  }
  auto F = std::make_shared<VectorFieldSpec>("X", A);
  F->copy_rules(*Fa);
  F->copy_rules(*Fr);
  if (Fp) F->copy_rules(*Fp);
  F->params = Fa->params;
  register_sigma(*F, "sigma_a", "a_");
  register_sigma(*F, "sigma_r", "r_");
  if (Fp)
    for (auto& s : Fp->singularities) F->singularities.push_back(s);
  return F;
}

struct GlueResult {
  std::shared_ptr<VectorFieldSpec> X;
  BuildReport report;
  std::vector<double> foliation_angles;  // radians, one per sample on A_1
};

// Angle on A_1 between the image under the plug crossing of a radial
// segment of A_0 and the radial foliation of A_1. Radial segments of A_0 carry
// the unstable foliation of U_r and radial segments of A_1 the stable one of
// U_a, so this is the transversality of the two glued foliations.
inline double foliation_angle(const PlugCrossing& pc, double theta, double r, double h = 1e-4) {
  CrossingResult p = crossing_map_P(pc, theta, r + h), m = crossing_map_P(pc, theta, r - h);
  CrossingResult c = crossing_map_P(pc, theta, r);
  double ds = (p.s - m.s) / (2.0 * h);
  double dth = (p.theta - m.theta) / (2.0 * h);
  // Round metric of S^2 in (s, theta): polar angle pi s / 2.
  double along = std::abs(ds) * kPi / 2.0;
  double across = std::abs(dth) * std::sin(kPi * c.s / 2.0);
  return std::atan2(across, along);
}

// Assembles X and checks the declared gluing. Throws GluingConstraintViolated
// naming the failed alignment unless check = false.
inline GlueResult glue_S3(const PlugParams& PP, const LorenzParams& L, bool check = true, int samples = 64) {
  GlueResult g;
  g.X = build_S3_field(L, &PP, check);
  BuildReport& rep = g.report;
  rep.name = "glue_S3";
  GluingReport gl = check_gluing(*g.X, 200);
  rep.add("check_gluing <= 1e-8", 1e-8 - gl.max_mismatch);

  // U_r is minus U_a in identical coordinates.
  double worst = 0.0;
  const Atlas& A = g.X->atlas();
  for (const Chart& c : A.charts()) {
    if (c.id.rfind("a_", 0) != 0) continue;
    std::string rid = "r_" + c.id.substr(2);
    for (int i = 0; i < 16; ++i) {
      Vec x(3);
      for (int k = 0; k < 3; ++k) {
        double u = std::fmod(0.618034 * (i + 1) * (k + 2) + 0.1 * k, 1.0);
        x(k) = c.lo(k) + u * (c.hi(k) - c.lo(k));
      }
      if (!c.contains(x)) continue;
      worst = std::max(worst, (g.X->eval_raw(rid, x) + g.X->eval_raw(c.id, x)).norm());
    }
  }
  rep.add_bool("X on U_r = -X on U_a", worst <= 1e-12, -worst);

  PlugCrossing pc = build_plug_crossing(PP);
  double amin = 1e300;
  for (int i = 0; i < samples; ++i) {
    double theta = 2.0 * kPi * i / samples;
    double r = 0.1 + 0.8 * ((i * 37) % samples) / double(samples);
    double a = foliation_angle(pc, theta, r);
    g.foliation_angles.push_back(a);
    amin = std::min(amin, a);
  }
  rep.add("foliation angle on A_1 >= 1e-3", amin - 1e-3);
  if (check) {
    if (const Check* f = rep.first_failure()) throw Error(ErrorKind::GluingConstraintViolated, f->name);
  }
  return g;
}

}  // namespace artifact
