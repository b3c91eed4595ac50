#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "artifact/atlas.hpp"
#include "artifact/config.hpp"
#include "artifact/report.hpp"

namespace artifact {

// The diffeomorphism H(x, l) = (r_l(x), theta_x(l)) of S^3 x T.
//
// r_l moves the ball B_a (cube of sigma_a) onto B_r (cube of sigma_r). Both
// cubes are attached to an auxiliary corridor chart W by translations along
// the unstable axis: cube_a -> W is c + off_a, cube_r -> W is c + off_r. In W,
// r_l is the time sigma(l) flow of a localized screw field: translation by
// `shift` along the X axis plus a quarter turn about it (w -> s). The axis is
// invariant, so p = (p_x, 0, 0) in cube_a goes exactly onto the axis of cube_r.
// B_a is tilted towards the unstable axis so that grad g(p) has components
// along both x and w; with the quarter turn this makes the connecting orbit
// through (p, 0) transverse.
struct HParams {
  double eps = 0.05;
  double p_x = 0.5;        // p = (p_x, 0, 0) in cube_a, p' likewise in cube_r
  double ball_r = 0.04;    // B_a, B_r touch the axis at p, p'
  double tilt = 0.5235987755982988;  // angle of the B_a centre offset from the w axis towards x
  double turn = kPi / 2.0;           // screw rotation
  double ball_A = 0.06;    // radius of the enlarged ball B_A carrying g
  double off_a = -1.1;     // cube_a -> W translation along X
  double off_r = 0.1;      // cube_r -> W translation along X
  double dr_x = 0.25;      // D_r = {cube_r x < dr_x} plus everything outside the charts
  int screw_steps = 512;
  double shift_w = 0.0;    // translation T_eps of balls, p, p' and screw axis along w

  static HParams from(const ParamFile& pf) {
    HParams p;
    p.eps = pf.get("epsilon", p.eps);
    p.p_x = pf.get("p_x", p.p_x);
    p.ball_r = pf.get("ball_radius", p.ball_r);
    p.dr_x = pf.get("dr_x", p.dr_x);
    return p;
  }

  static constexpr double kMaxShift = 0.2;
  Eigen::Vector3d p_pt() const { return {p_x, shift_w, 0.0}; }

  double shift() const { return (p_x + off_r) - (p_x + off_a); }

  // Neighbourhoods of the cubes identified with W.
  bool in_Na(const Eigen::Vector3d& c) const {
    return c(0) >= p_x - 0.3 && c(0) <= p_x + 0.3 && std::abs(c(1)) <= 0.3 && std::abs(c(2)) <= 0.3;
  }
  bool in_Nr(const Eigen::Vector3d& c) const {
    return c(0) >= p_x - 0.2 && c(0) <= p_x + 0.4 && std::abs(c(1)) <= 0.3 && std::abs(c(2)) <= 0.3;
  }

  // ---- scalar profiles ----
  double bump_half(double l) const { return 1.0 - smoothstep(2.0 * std::abs(l)); }
  double h(double l) const { return 0.25 * eps * (1.0 + l) * bump_half(l); }
  double dh(double l, double d = 1e-7) const { return (h(l + d) - h(l - d)) / (2.0 * d); }
  // Cutoff in l applied to g so that theta_x(l) = l for |l| >= 1/2.
  double kappa(double l) const { return 1.0 - smoothstep((std::abs(l) - 0.25) / 0.25); }
  double sigma(double l) const { return 1.0 - smoothstep((std::abs(l) - 0.5) / 0.5); }
  // Box-time profile, s in [-1, 0].
  static double rho(double s) { return smoothstep(s + 1.0); }
  static double drho(double s) { return smoothstep_d(s + 1.0); }

  Eigen::Vector3d center_a() const {
    return p_pt() + ball_r * Eigen::Vector3d(std::sin(tilt), std::cos(tilt), 0.0);
  }
  Eigen::Vector3d center_r() const {
    double c = std::cos(tilt);
    return p_pt() + ball_r * Eigen::Vector3d(std::sin(tilt), c * std::cos(turn), c * std::sin(turn));
  }

  // g in cube_a coordinates: -(eps/4) beta(|c - c_a|) (1 + phi), phi > 0
  // exactly inside B_a and phi = 0 on its boundary, so g(p) = -eps/4 and
  // {g <= -eps/4} lies in B_a.
  double g_cube(const Eigen::Vector3d& c) const {
    double r = (c - center_a()).norm();
    if (r >= ball_A) return 0.0;
    double beta = 1.0 - smoothstep((r - ball_r) / (ball_A - ball_r));
    // R^2 - |c - c_a|^2 expanded about p, so that it vanishes exactly at p.
    Eigen::Vector3d dp = c - p_pt();
    double phi = 0.5 * (-dp.squaredNorm() - 2.0 * dp.dot(p_pt() - center_a())) / (ball_r * ball_r);
    return -0.25 * eps * beta * (1.0 + phi);
  }

  // ---- corridor screw ----
  // Radial support stays inside |w| <= 0.1 so images never leave the cubes.
  static constexpr double kScrewCore = 0.085, kScrewEdge = 0.1;
  Eigen::Vector3d screw_field(const Eigen::Vector3d& X) const {
    const double yw = X(1) - shift_w;
    double rad = std::hypot(yw, X(2));
    double half = 0.5 * shift();
    double bx = 1.0 - smoothstep((std::abs(X(0)) - (half + 0.12)) / 0.08);
    double br = 1.0 - smoothstep((rad - kScrewCore) / (kScrewEdge - kScrewCore));
    double k = bx * br;
    return {k * shift(), -k * turn * X(2), k * turn * yw};
  }
  Eigen::Vector3d screw_flow(Eigen::Vector3d X, double tau) const {
    if (tau == 0.0) return X;
    const int n = screw_steps;
    const double dt = tau / n;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d k1 = screw_field(X);
      Eigen::Vector3d k2 = screw_field(X + 0.5 * dt * k1);
      Eigen::Vector3d k3 = screw_field(X + 0.5 * dt * k2);
      Eigen::Vector3d k4 = screw_field(X + dt * k3);
      X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return X;
  }

  BuildReport checks() const;
};

// Result of applying r or H to an S^3 state. `corridor` marks images that
// land in the part of W not identified with either cube.
struct S3Image {
  ChartPoint x;
  bool corridor = false;
};

inline std::optional<Eigen::Vector3d> to_corridor(const HParams& P, const ChartPoint& x) {
  if (x.x.size() != 3) return std::nullopt;
  Eigen::Vector3d c = x.x;
  if (x.chart == "a_cube" && P.in_Na(c)) return Eigen::Vector3d(c(0) + P.off_a, c(1), c(2));
  if (x.chart == "r_cube" && P.in_Nr(c)) return Eigen::Vector3d(c(0) + P.off_r, c(1), c(2));
  return std::nullopt;
}

inline S3Image from_corridor(const HParams& P, const Eigen::Vector3d& X) {
  Eigen::Vector3d ca(X(0) - P.off_a, X(1), X(2)), cr(X(0) - P.off_r, X(1), X(2));
  if (P.in_Na(ca)) return {{"a_cube", Vec(ca)}, false};
  if (P.in_Nr(cr)) return {{"r_cube", Vec(cr)}, false};
  return {{"corridor", Vec(X)}, true};
}

inline double g_of(const HParams& P, const ChartPoint& x) {
  if (x.chart == "a_cube") return P.g_cube(x.x);
  if (x.chart == "corridor") return P.g_cube(Eigen::Vector3d(x.x(0) - P.off_a, x.x(1), x.x(2)));
  return 0.0;
}

inline double theta_of(const HParams& P, const ChartPoint& x, double l) {
  return l + P.h(l) + P.kappa(l) * g_of(P, x);
}

// r_l^amount: amount in [0, 1] scales the isotopy time (used inside the box).
inline S3Image r_map(const HParams& P, double l, const ChartPoint& x, double amount = 1.0) {
  double tau = P.sigma(l) * amount;
  if (tau == 0.0) return {x, false};
  Eigen::Vector3d X;
  if (x.chart == "corridor") {
    X = x.x;
  } else if (auto w = to_corridor(P, x)) {
    X = *w;
  } else {
    return {x, false};
  }
  Eigen::Vector3d Y = P.screw_flow(X, tau);
  if (Y == X) return {x, false};  // outside the screw support
  return from_corridor(P, Y);
}

struct HImage {
  ChartPoint x;
  double l = 0.0;
  bool corridor = false;
};

inline HImage H_map(const HParams& P, const ChartPoint& x, double l) {
  S3Image r = r_map(P, l, x);
  return {r.x, theta_of(P, x, l), r.corridor};
}

// Inverse of H by alternating the exact inverse of r_l (backward screw flow)
// with a scalar Newton solve of theta_{x0}(l0) = l'.
inline HImage H_inverse(const HParams& P, const ChartPoint& y, double lp) {
  double l0 = lp;
  ChartPoint x0 = y;
  for (int it = 0; it < 50; ++it) {
    S3Image back = r_map(P, l0, y, -1.0);
    x0 = back.x;
    double gl = g_of(P, x0);
    double l1 = l0;
    for (int k = 0; k < 30; ++k) {
      double f = l1 + P.h(l1) + P.kappa(l1) * gl - lp;
      double d = 1e-7;
      double df = (P.h(l1 + d) - P.h(l1 - d) + (P.kappa(l1 + d) - P.kappa(l1 - d)) * gl) / (2 * d) + 1.0;
      double step = f / df;
      l1 -= step;
      if (std::abs(step) < 1e-15) break;
    }
    bool done = std::abs(l1 - l0) < 1e-14;
    l0 = l1;
    if (done) break;
  }
  S3Image back = r_map(P, l0, y, -1.0);
  return {back.x, l0, back.corridor};
}

inline BuildReport HParams::checks() const {
  BuildReport r;
  r.name = "H";
  r.add("eps > 0", eps);
  r.add_bool("h(0) = eps/4", std::abs(h(0.0) - 0.25 * eps) < 1e-15, -std::abs(h(0.0) - 0.25 * eps));
  r.add("h'(0) != 0", std::abs(dh(0.0)));
  double maxdh = 0.0, minh_in = 1e300, maxh = 0.0, maxh_out = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    double l = -1.0 + 2.0 * i / 4000.0;
    maxdh = std::max(maxdh, std::abs(dh(l)));
    if (std::abs(l) < 0.5 - 1e-3) minh_in = std::min(minh_in, h(l));
    if (std::abs(l) >= 0.5) maxh_out = std::max(maxh_out, std::abs(h(l)));
    maxh = std::max(maxh, h(l));
  }
  r.add("|h'| < 1", 1.0 - maxdh);
  r.add("h > 0 on (-1/2, 1/2)", minh_in);
  r.add("h <= eps/2", 0.5 * eps - maxh);
  r.add_bool("h = 0 outside [-1/2, 1/2]", maxh_out == 0.0, -maxh_out);
  Eigen::Vector3d p = p_pt();
  r.add_bool("g(p) = -eps/4", std::abs(g_cube(p) + 0.25 * eps) < 1e-15, -std::abs(g_cube(p) + 0.25 * eps));
  Eigen::Vector3d grad;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e(i) = 1e-6;
    grad(i) = (g_cube(p + e) - g_cube(p - e)) / 2e-6;
  }
  r.add("grad g(p) != 0", grad.norm());
  // Samples of B_a on a lattice: |g| <= eps/2 and the theta band for small l.
  double worst_g = 1e300, worst_band = 1e300, worst_pos = 1e300;
  const int n = 12;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        Eigen::Vector3d u(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n, -1.0 + 2.0 * k / n);
        Eigen::Vector3d c = center_a() + 1.6 * ball_r * u;
        double rr = (c - center_a()).norm();
        double g = g_cube(c);
        if (rr <= ball_r) {
          worst_g = std::min(worst_g, 0.5 * eps - std::abs(g));
          for (int m = 0; m <= 10; ++m) {
            double l = 0.5 * eps * m / 10.0;
            double th = l + h(l) + kappa(l) * g;
            worst_band = std::min(worst_band, eps - std::abs(th));
          }
        } else {
          for (int m = 0; m <= 50; ++m) {
            double l = 0.5 * m / 50.0;
            worst_pos = std::min(worst_pos, l + h(l) + kappa(l) * g);
          }
        }
      }
  r.add("|g| <= eps/2 on B_a", worst_g);
  r.add("-eps <= theta <= eps on B_a, l in [0, eps/2]", worst_band);
  r.add("theta > 0 off B_a, l in [0, 1/2]", worst_pos);
  double mono = 1e300;
  for (int i = 0; i <= 4000; ++i) {
    double l = -1.0 + 2.0 * i / 4000.0, d = 1e-6;
    double th1 = l + d + h(l + d) + kappa(l + d) * g_cube(p);
    double th0 = l - d + h(l - d) + kappa(l - d) * g_cube(p);
    mono = std::min(mono, (th1 - th0) / (2 * d));
  }
  r.add("theta_p strictly increasing", mono);
  // Screw support (|X| <= half + 0.2 in W) must sit inside N_a and N_r and
  // clear of D_r; B_a must lie in the rigid core.
  double half = 0.5 * shift();
  r.add("screw support inside N_a", (-half - 0.2 - off_a) - (p_x - 0.3));
  r.add("screw support inside N_r", (p_x + 0.4) - (half + 0.2 - off_r));
  r.add("screw support clear of D_r", (p_x - 0.2) - dr_x);
  r.add("B_a inside rigid core", kScrewCore - 2.0 * ball_r);
  return r;
}

}  // namespace artifact
