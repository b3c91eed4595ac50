#pragma once

#include <fmt/format.h>

#include <cmath>
#include <memory>
#include <vector>

#include "artifact/parallel.hpp"
#include "artifact/plug_crossing.hpp"
#include "artifact/recurrence.hpp"
#include "artifact/rp2.hpp"
#include "artifact/verification_m5.hpp"

namespace artifact {

// ---------- plug chain classes ----------

inline constexpr double kPlugTStep = 5.0;

struct PlugClasses {
  bool completion = false;
  BoxGraph graph;
  std::vector<ChainClass> classes;
  int expected = 0;
  bool pass = false;

  json to_json() const {
    json reps = json::array();
    for (auto& c : classes)
      reps.push_back({{"boxes", c.boxes.size()}, {"s", c.representative.x(0)}, {"y", c.representative.x(1)}});
    return {{"completion", completion}, {"boxes", graph.nboxes}, {"classes", classes.size()},
            {"expected", expected},     {"representatives", reps}, {"pass", pass}};
  }
};

// The rotation angle is a symmetry of the plug, so chain classes are computed
// on the (s, y) quotient with s treated as a circle-free coordinate.
inline RegionSpec plug_quotient_region(bool completion) {
  const double Y = completion ? 2.0 : 1.0;
  Vec lo(2), hi(2);
  lo << 0.0, -Y;
  hi << 2.0, Y;
  return RegionSpec{{RegionBox{"quot", lo, hi, {0}}}};
}

inline PlugClasses plug_chain_classes(const PlugParams& P, bool completion, double delta, double eps,
                                      GraphOptions opt = {}) {
  PlugClasses out;
  out.completion = completion;
  auto Q = build_plug_quotient(P, completion);
  out.graph = build_box_graph(*Q, plug_quotient_region(completion), delta, kPlugTStep, eps, -1, opt);
  out.classes = chain_classes(out.graph);
  out.expected = completion ? 8 : 6;
  out.pass = int(out.classes.size()) == out.expected;
  return out;
}

// V_a = {y >= -0.98} attracts and V_r = {y <= 0.98} repels on the completed
// quotient; U is their intersection.
inline FiltratingNeighborhood plug_filtrating_neighborhood(const PlugParams& P, double t = 20.0) {
  auto Q = build_plug_quotient(P, true);
  Vec lo(2), hi(2);
  lo << 0.0, -0.98;
  hi << 2.0, 2.0;
  RegionSpec Va{{RegionBox{"quot", lo, hi, {0}}}};
  lo << 0.0, -2.0;
  hi << 2.0, 0.98;
  RegionSpec Vr{{RegionBox{"quot", lo, hi, {0}}}};
  auto ca = is_attracting_region(*Q, Va, t);
  auto cr = is_attracting_region(*Q->negated(), Vr, t);
  return filtrating_neighborhood(Va, ca, Vr, cr);
}

// ---------- crossing map transversality ----------

struct CrossingTransversality {
  int grid = 0;
  double min_slope = 0.0;  // min |dP_theta / dr| over the grid
  double refined_slope = 0.0;
  double refinement_change = 0.0;  // |refined / coarse - 1|
  bool pass = false;

  json to_json() const {
    return {{"grid", grid},
            {"min_abs_dtheta_dr", min_slope},
            {"refined_grid", 2 * grid},
            {"refined_min_abs_dtheta_dr", refined_slope},
            {"refinement_change", refinement_change},
            {"pass", pass}};
  }
};

inline double crossing_min_slope(const PlugCrossing& pc, int n, int threads = 0) {
  auto v = parallel_map<double>(
      size_t(n) * n,
      [&](size_t k) {
        double th = 2.0 * kPi * double(k / n) / n;
        double r = (double(k % n) + 0.5) / n;
        return std::abs(crossing_dtheta_dr(pc, th, r));
      },
      threads);
  return *std::min_element(v.begin(), v.end());
}

inline CrossingTransversality crossing_transversality(const PlugCrossing& pc, int n = 32, int threads = 0) {
  CrossingTransversality c;
  c.grid = n;
  c.min_slope = crossing_min_slope(pc, n, threads);
  c.refined_slope = crossing_min_slope(pc, 2 * n, threads);
  c.refinement_change = std::abs(c.refined_slope / c.min_slope - 1.0);
  c.pass = c.min_slope > 0.0 && c.refinement_change <= 0.2;
  return c;
}

// Rows theta, r, theta', r', tau on an n x n grid of A0.
struct CrossingRow {
  double theta, r, theta1, r1, tau;
};

inline std::vector<CrossingRow> crossing_map_grid(const PlugCrossing& pc, int n, int threads = 0) {
  return parallel_map<CrossingRow>(
      size_t(n) * n,
      [&](size_t k) {
        double th = 2.0 * kPi * double(k / n) / n;
        double r = (double(k % n) + 0.5) / n;
        CrossingResult c = crossing_map_P(pc, th, r);
        return CrossingRow{th, r, c.theta, c.r, c.tau};
      },
      threads);
}

// ---------- A0 -> A1 crossing ----------

struct AnnulusCrossing {
  int annulus_samples = 0, annulus_crossed = 0;
  int disc_samples = 0, disc_denied = 0;
  double t_max = 0.0;
  double c0 = 0.0;
  bool pass = false;

  json to_json() const {
    return {{"c0", c0},
            {"t_max", t_max},
            {"annulus", {{"samples", annulus_samples}, {"crossed", annulus_crossed}}},
            {"disc", {{"samples", disc_samples}, {"denied", disc_denied}}},
            {"pass", pass}};
  }
};

// Annulus points are s in (c0, 2 - c0); disc points fill the two polar caps
// s < c0 and s > 2 - c0 of the entry sphere. Only s matters for crossing, the
// rotation angle is carried along in the lift.
inline AnnulusCrossing annulus_crossing(const PlugCrossing& pc, int n = 1000, double t_max = 400.0,
                                        int threads = 0) {
  AnnulusCrossing a;
  a.t_max = t_max;
  a.c0 = pc.c0;
  a.annulus_samples = a.disc_samples = n;
  auto crossed = parallel_map<int>(
      size_t(2 * n),
      [&](size_t k) {
        double u = radical_inverse(int(k % n) + 1, 2);
        double s;
        if (int(k) < n) {
          s = pc.c0 + u * (2.0 - 2.0 * pc.c0);
        } else {
          double w = u * pc.c0;
          s = (k % 2) ? w : 2.0 - w;
        }
        return plug_orbit_crosses(*pc.quotient, s, t_max) ? 1 : 0;
      },
      threads);
  for (int k = 0; k < n; ++k) a.annulus_crossed += crossed[k];
  for (int k = n; k < 2 * n; ++k) a.disc_denied += 1 - crossed[k];
  a.pass = a.annulus_crossed == n && a.disc_denied == n;
  return a;
}

// ---------- RP^2 crossings ----------

struct RP2Orbit {
  double l = 0.0;
  int fwd_crossings = 0, bwd_crossings = 0;
  double bwd_first_l = 0.0, fwd_first_l = 0.0;
  std::string omega, alpha;
  bool ok = false;
};

struct RP2Report {
  double t_max = 0.0;
  std::vector<RP2Orbit> orbits;
  int mismatches = 0;
  bool pass = false;

  json to_json() const {
    int pos = 0, neg = 0;
    for (auto& o : orbits) (o.l > 0 ? pos : neg)++;
    json bad = json::array();
    for (auto& o : orbits)
      if (!o.ok && bad.size() < 10)
        bad.push_back({{"l", o.l}, {"fwd", o.fwd_crossings}, {"bwd", o.bwd_crossings}, {"omega", o.omega},
                       {"alpha", o.alpha}});
    return {{"t_max", t_max}, {"positive", pos}, {"negative", neg},
            {"mismatches", mismatches}, {"examples", bad}, {"pass", pass}};
  }
};

// Name of the singularity a run ended at, or "none".
inline std::string rp2_limit(const VectorFieldSpec& Y, const FlowResult& r, double tol = 1e-3) {
  for (auto& s : Y.singularities)
    if (s.location.chart == r.end.chart && (r.end.x - s.location.x).norm() < tol) return s.name;
  return "none";
}

inline RP2Orbit rp2_classify(const VectorFieldSpec& Y, const RP2Params& P, double l, double t_max,
                             double dt = 1e-3) {
  RP2Orbit o;
  o.l = l;
  SectionSpec sec = rp2_section_T(P);
  FlowOptions fo;
  fo.dt = dt;
  fo.section = &sec;
  fo.stop_at_section = false;
  Integrator I(Y);
  ChartPoint x = rp2_T_point(P, l);
  FlowResult f = I.run(x, t_max, fo);
  FlowResult b = I.run(x, -t_max, fo);
  o.fwd_crossings = int(f.hits.size());
  o.bwd_crossings = int(b.hits.size());
  if (!f.hits.empty()) o.fwd_first_l = f.hits.front().post.x(0) / P.a;
  if (!b.hits.empty()) o.bwd_first_l = b.hits.front().post.x(0) / P.a;
  o.omega = rp2_limit(Y, f);
  o.alpha = rp2_limit(Y, b);
  // x > 0: no forward crossing, one backward crossing to x' < 0.
  // x < 0: one forward crossing to x' > 0, no backward crossing.
  bool counts = l > 0 ? (o.fwd_crossings == 0 && o.bwd_crossings == 1 && o.bwd_first_l < 0)
                      : (o.fwd_crossings == 1 && o.bwd_crossings == 0 && o.fwd_first_l > 0);
  o.ok = counts && o.omega == "omega" && o.alpha == "alpha";
  return o;
}

inline RP2Report rp2_crossings(const VectorFieldSpec& Y, const RP2Params& P, int per_side = 100,
                               double t_max = 100.0, int threads = 0) {
  RP2Report rep;
  rep.t_max = t_max;
  rep.orbits = parallel_map<RP2Orbit>(
      size_t(2 * per_side),
      [&](size_t k) {
        double u = (double(k % per_side) + 0.5) / per_side;
        double l = int(k) < per_side ? u : -u;
        return rp2_classify(Y, P, l, t_max);
      },
      threads);
  for (auto& o : rep.orbits) rep.mismatches += o.ok ? 0 : 1;
  rep.pass = rep.mismatches == 0;
  return rep;
}

}  // namespace artifact
