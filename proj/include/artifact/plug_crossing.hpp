#pragma once

#include <fmt/format.h>

#include <cmath>
#include <memory>

#include "artifact/dynamics.hpp"
#include "artifact/plug_atlas.hpp"

namespace artifact {

// Quotient field (s', y') on [0,2] x [-Y, Y]. With completion the strips
// 1 < |y| <= 2 carry the radial part of the sink ball (y = 2 is a) and of
// the source ball (y = -2 is r); there s' = 0.
inline std::shared_ptr<VectorFieldSpec> build_plug_quotient(const PlugParams& P, bool completion = false) {
  auto A = std::make_shared<Atlas>(completion ? "S3_plug_quotient" : "plug_quotient");
  const double Y = completion ? 2.0 : 1.001;
  Chart c{"quot", 2, Vec(2), Vec(2), 0};
  c.lo << 0.0, -Y;
  c.hi << 2.0, Y;
  A->add_chart(c);
  auto F = std::make_shared<VectorFieldSpec>(completion ? "plug_s3_quotient" : "plug_quotient", A);
  F->set_rule("quot", make_rule<2>([P](const auto& z) {
                using T = typename std::decay_t<decltype(z)>::Scalar;
                using std::abs;
                Eigen::Matrix<T, 2, 1> o;
                if (abs(z(1)) <= 1.0) {
                  T sd, yd;
                  plug_detail::quotient_rates(P, T(z(0)), T(z(1)), sd, yd);
                  o << sd, yd;
                } else {
                  T r = 2.0 - abs(z(1));
                  o << 0.0 * z(0), r * plug_detail::ball_psi(T(r + 1e-300));
                }
                return o;
              }));
  return F;
}

// Single chart (s, theta, y) with theta unbounded, used to follow the lifted
// winding of crossing orbits.
inline std::shared_ptr<VectorFieldSpec> build_plug_lift(const PlugParams& P) {
  auto A = std::make_shared<Atlas>("plug_lift");
  Chart c{"lift", 3, Vec(3), Vec(3), 0};
  c.lo << 0.02, -1e7, -1.001;
  c.hi << 1.98, 1e7, 1.001;
  A->add_chart(c);
  auto F = std::make_shared<VectorFieldSpec>("plug_lift", A);
  F->set_rule("lift", make_rule<3>([P](const auto& z) {
                using T = typename std::decay_t<decltype(z)>::Scalar;
                using std::cos;
                T sd, yd;
                plug_detail::quotient_rates(P, T(z(0)), T(z(2)), sd, yd);
                T c = cos(kPi * z(0));
                Eigen::Matrix<T, 3, 1> o;
                o << sd,
                    plug_detail::chi(P, T(z(2))) * std::sqrt(2.0) * cos(kPi * z(0) / 2.0) * (1.0 - c) *
                        (1.0 + 0.75 * c),
                    yd;
                return o;
              }));
  return F;
}

inline SectionSpec plug_exit_section(const std::string& chart) {
  SectionSpec s;
  s.chart = chart;
  s.level = [](const Vec& z) { return z(z.size() - 1) - 1.0; };
  s.orientation = +1;
  return s;
}

// True if the quotient orbit entering at (s, -1) reaches y = 1 within t_max.
inline bool plug_orbit_crosses(const VectorFieldSpec& quot, double s, double t_max, double dt = 5e-3,
                               double* tau = nullptr) {
  SectionSpec sec = plug_exit_section("quot");
  FlowOptions o;
  o.dt = dt;
  o.section = &sec;
  Vec x(2);
  x << s, -1.0;
  FlowResult r = Integrator(quot).run({"quot", x}, t_max, o);
  if (tau && !r.hits.empty()) *tau = r.t;
  return !r.hits.empty();
}

struct PlugCrossing {
  PlugParams params;
  std::shared_ptr<VectorFieldSpec> quotient, lift;
  double c0 = 0.0;  // entry annulus A0 = {c0 < s < 2 - c0} x S^1 x {-1}
  double c1 = 0.0;  // exit annulus A1, same form at y = 1
  double dt = kDefaultDt;
};

// c0 is located by bisection on whether the entry orbit reaches y = 1 within
// t_bisect; the residual error is of order exp(-lambda t_bisect) for the saddle
// rate lambda. c1 follows from the y -> -y, t -> -t symmetry of the quotient.
inline PlugCrossing build_plug_crossing(const PlugParams& P, double dt = kDefaultDt, double t_bisect = 300.0) {
  PlugCrossing pc;
  pc.params = P;
  pc.dt = dt;
  pc.quotient = build_plug_quotient(P);
  pc.lift = build_plug_lift(P);
  double lo = 0.02, hi = 0.98;
  if (plug_orbit_crosses(*pc.quotient, lo, t_bisect, 5e-3) || !plug_orbit_crosses(*pc.quotient, hi, t_bisect, 5e-3))
    throw Error(ErrorKind::ParamOutOfRange, "plug: entry annulus not bracketed");
  for (int i = 0; i < 40; ++i) {
    double mid = 0.5 * (lo + hi);
    (plug_orbit_crosses(*pc.quotient, mid, t_bisect, 5e-3) ? hi : lo) = mid;
  }
  pc.c0 = 0.5 * (lo + hi);
  pc.c1 = pc.c0;
  return pc;
}

struct CrossingResult {
  double theta = 0.0, r = 0.0;  // exit point in A1 (theta lifted)
  double s = 0.0;
  double tau = 0.0;
};

inline double plug_s_of_r(const PlugCrossing& pc, double r) { return pc.c0 + r * (2.0 - 2.0 * pc.c0); }

// First hit of A1 for the orbit entering A0 at (theta, r).
inline CrossingResult crossing_map_P(const PlugCrossing& pc, double theta, double r, double t_max = 400.0) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::NoCrossing, fmt::format("r = {} outside (0,1)", r));
  SectionSpec sec = plug_exit_section("lift");
  FlowOptions o;
  o.dt = pc.dt;
  o.section = &sec;
  Vec x(3);
  x << plug_s_of_r(pc, r), theta, -1.0;
  FlowResult res = Integrator(*pc.lift).run({"lift", x}, t_max, o);
  if (res.hits.empty())
    throw Error(ErrorKind::NoCrossing,
                fmt::format("orbit from (theta={}, r={}) ended at s={}, y={} after t={}{}", theta, r, res.end.x(0),
                            res.end.x(2), res.t, res.exited ? " (left the chart)" : ""));
  CrossingResult c;
  c.s = res.end.x(0);
  c.theta = res.end.x(1);
  c.r = (c.s - pc.c1) / (2.0 - 2.0 * pc.c1);
  c.tau = res.t;
  return c;
}

inline double crossing_dtheta_dr(const PlugCrossing& pc, double theta, double r, double h = 1e-4) {
  return (crossing_map_P(pc, theta, r + h).theta - crossing_map_P(pc, theta, r - h).theta) / (2.0 * h);
}

}  // namespace artifact
