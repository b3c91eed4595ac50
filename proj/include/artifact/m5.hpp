#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "artifact/hmap.hpp"
#include "artifact/lorenz.hpp"
#include "artifact/rp2.hpp"
#include "artifact/s3.hpp"

namespace artifact {

struct M5Params {
  LorenzParams lorenz;
  RP2Params rp2;
  HParams h;
  double dt = kDefaultDt;
};

// Z_H on S^3 x RP^2. Away from the flow box the field is (X, Y). The box is
// the collar slab tau in [tau_T - 1, tau_T] of Y, with box time s = tau - tau_T
// in [-1, 0]. In box coordinates (S^3 points transported back to s = -1 by X)
// the S^3 x T part follows the isotopy F(., s) from id to H; crossing the box
// therefore sends (x, l) to (phi_X^1(r_l(x)), theta_x(l)).
struct M5System {
  M5Params P;
  std::shared_ptr<VectorFieldSpec> X, Y;
  bool identity = false;  // Z_id
  double tau_in() const { return P.rp2.tau_T - 1.0; }
  double tau_out() const { return P.rp2.tau_T; }
  double K_Y() const { return P.rp2.K_Y_plus_1() - 1.0; }
};

inline std::shared_ptr<M5System> build_ZH(const M5Params& P, bool check = true) {
  if (check) P.h.checks().enforce();
  auto s = std::make_shared<M5System>();
  s->P = P;
  s->X = build_S3_field(P.lorenz, nullptr, check);
  s->Y = build_rp2_field(P.rp2, check);
  return s;
}

inline std::shared_ptr<M5System> build_Zid(const M5Params& P) {
  auto s = build_ZH(P, false);
  s->identity = true;
  return s;
}

// Z_H with r_l replaced by its conjugate under the translation T_eps along w.
inline std::shared_ptr<M5System> build_ZHeps(const M5Params& P, double eps_shift, bool check = true) {
  if (!(eps_shift >= 0.0) || eps_shift > HParams::kMaxShift)
    throw Error(ErrorKind::ShiftTooLarge, fmt::format("eps_shift = {} outside [0, {}]", eps_shift, HParams::kMaxShift));
  M5Params Q = P;
  Q.h.shift_w = eps_shift;
  return build_ZH(Q, check);
}

// ---------- box isotopy in corridor coordinates ----------

struct BoxState {
  Eigen::Vector3d X;
  double l = 0.0;
};

// F(., s): (X0, l0) -> (screw^{sigma(l0) rho(s)}(X0), l0 + rho(s)(h(l0) + kappa(l0) g(X0))).
inline BoxState isotopy_F(const HParams& H, const BoxState& z0, double s) {
  double rs = HParams::rho(s);
  ChartPoint c{"corridor", Vec(z0.X)};
  return {H.screw_flow(z0.X, H.sigma(z0.l) * rs), z0.l + rs * (H.h(z0.l) + H.kappa(z0.l) * g_of(H, c))};
}

// Eulerian velocity of the isotopy at (X, l, s): recover the initial
// (X0, l0) by inverting F(., s), then differentiate in s.
inline Eigen::Vector4d box_field(const HParams& H, const Eigen::Vector3d& X, double l, double s) {
  double rs = HParams::rho(s), dr = HParams::drho(s);
  double l0 = l;
  Eigen::Vector3d X0 = X;
  for (int it = 0; it < 60; ++it) {
    X0 = H.screw_flow(X, -H.sigma(l0) * rs);
    double g = g_of(H, {"corridor", Vec(X0)});
    auto resid = [&](double q) { return q + rs * (H.h(q) + H.kappa(q) * g) - l; };
    double d = 1e-7;
    double step = resid(l0) / ((resid(l0 + d) - resid(l0 - d)) / (2 * d));
    l0 -= step;
    if (std::abs(step) < 1e-15) break;
  }
  X0 = H.screw_flow(X, -H.sigma(l0) * rs);
  double g = g_of(H, {"corridor", Vec(X0)});
  Eigen::Vector4d v;
  v.head<3>() = dr * H.sigma(l0) * H.screw_field(X);
  v(3) = dr * (H.h(l0) + H.kappa(l0) * g);
  return v;
}

// Integrates the box field from s = -1 to 0 with RK4.
inline BoxState integrate_box(const HParams& H, const BoxState& z0, double dt = kDefaultDt) {
  Eigen::Vector4d z;
  z << z0.X, z0.l;
  int n = int(std::lround(1.0 / dt));
  double h = 1.0 / n;
  auto f = [&](const Eigen::Vector4d& q, double s) { return box_field(H, q.head<3>(), q(3), s); };
  for (int i = 0; i < n; ++i) {
    double s = -1.0 + i * h;
    Eigen::Vector4d k1 = f(z, s), k2 = f(z + 0.5 * h * k1, s + 0.5 * h), k3 = f(z + 0.5 * h * k2, s + 0.5 * h),
                    k4 = f(z + h * k3, s + h);
    z += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return {z.head<3>(), z(3)};
}

// Largest endpoint mismatch |F(., -1) - id|, |F(., 0) - H| over a lattice of
// corridor points; throws IsotopyMismatch beyond 1e-10 when enforce is set.
inline double isotopy_endpoint_error(const HParams& H, bool enforce = true) {
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) {
        Vec c(3);
        c << H.p_x - 0.1 + 0.05 * i, H.shift_w - 0.08 + 0.04 * j, -0.08 + 0.04 * k;
        ChartPoint x{"a_cube", c};
        Eigen::Vector3d X = *to_corridor(H, x);
        for (double l : {-0.9, -0.3, 0.0, 0.2, 0.7}) {
          BoxState a = isotopy_F(H, {X, l}, -1.0);
          worst = std::max({worst, (a.X - X).norm(), std::abs(a.l - l)});
          BoxState b = isotopy_F(H, {X, l}, 0.0);
          HImage hm = H_map(H, x, l);
          Eigen::Vector3d hx = hm.x.chart == "corridor" ? Eigen::Vector3d(hm.x.x) : *to_corridor(H, hm.x);
          worst = std::max({worst, (b.X - hx).norm(), std::abs(b.l - hm.l)});
        }
      }
  if (enforce && worst > 1e-10)
    throw Error(ErrorKind::IsotopyMismatch, fmt::format("isotopy endpoints differ by {}", worst));
  return worst;
}

// ---------- hybrid orbits ----------

struct M5State {
  ChartPoint x;  // chart "exterior" once the S^3 orbit leaves the charted pieces
  ChartPoint y;
  double t = 0.0;
  double pending = 0.0;  // X time not yet integrated
  bool undecided = false;
};

inline bool is_exterior(const ChartPoint& x) { return x.chart == "exterior"; }

inline void flush_X(const M5System& S, M5State& st) {
  if (is_exterior(st.x) || st.x.chart == "corridor" || st.pending == 0.0) {
    st.pending = 0.0;
    return;
  }
  FlowResult r = flow(*S.X, st.x, st.pending, S.P.dt);
  st.x = r.exited ? ChartPoint{"exterior", Vec()} : r.end;
  st.pending = 0.0;
}

inline ChartPoint m5_y_at(const M5System& S, double l, double tau) {
  Vec c(2);
  c << S.P.rp2.a * l, tau;
  return {"collar_2", c};
}

// Crosses the box forward from s = -1: the state must sit at tau_in.
inline void box_forward(const M5System& S, M5State& st) {
  flush_X(S, st);
  double l = st.y.x(0) / S.P.rp2.a;
  double lp = l;
  if (!S.identity) {
    HImage im = H_map(S.P.h, st.x, l);
    st.undecided |= im.corridor;
    st.x = im.x;
    lp = im.l;
  }
  st.pending += 1.0;
  st.y = m5_y_at(S, lp, S.tau_out());
  st.t += 1.0;
}

inline void box_backward(const M5System& S, M5State& st) {
  st.pending -= 1.0;
  flush_X(S, st);
  double lp = st.y.x(0) / S.P.rp2.a;
  double l = lp;
  if (!S.identity) {
    HImage im = H_inverse(S.P.h, st.x, lp);
    st.undecided |= im.corridor;
    st.x = im.x;
    l = im.l;
  }
  st.y = m5_y_at(S, l, S.tau_in());
  st.t -= 1.0;
}

struct M5Run {
  bool escaped = false;
  double t_escape = std::numeric_limits<double>::quiet_NaN();
  int box_crossings = 0;
  bool undecided = false;
  M5State end;
};

// Follows the hybrid orbit for signed time T (forward if T > 0) until Y enters
// the sink disc (forward) or the source disc (backward). The box crossing at
// the starting point, if any, is the caller's business.
inline M5Run run_m5(const M5System& S, M5State st, double T) {
  M5Run out;
  const double dir = T >= 0 ? 1.0 : -1.0;
  SectionSpec sec;
  sec.chart = "collar_2";
  const double lev = dir > 0 ? S.tau_in() : S.tau_out();
  sec.level = [lev](const Vec& c) { return c(1) - lev; };
  sec.orientation = +1;
  const std::string target = dir > 0 ? "u_omega" : "u_alpha";
  FlowOptions o;
  o.dt = S.P.dt;
  o.section = &sec;
  o.stop_when = [&](const ChartPoint& p) { return p.chart == target; };
  Integrator I(*S.Y);
  while (std::abs(st.t) < std::abs(T) - 1e-12 && !st.undecided) {
    double rem = T - st.t;
    FlowResult r = I.run(st.y, rem, o);
    st.y = r.end;
    st.t += r.t;
    st.pending += r.t;
    if (r.stopped) {
      out.escaped = true;
      out.t_escape = st.t;
      break;
    }
    if (!r.hits.empty()) {
      ++out.box_crossings;
      if (dir > 0) box_forward(S, st);
      else box_backward(S, st);
      continue;
    }
    if (r.exited) st.undecided = true;
  }
  flush_X(S, st);
  out.undecided = st.undecided;
  out.end = st;
  return out;
}

enum class M5Class { EscapeOmega, EscapeAlpha, Stays, Undecided };

inline const char* to_string(M5Class c) {
  switch (c) {
    case M5Class::EscapeOmega: return "escape_omega";
    case M5Class::EscapeAlpha: return "escape_alpha";
    case M5Class::Stays: return "stays";
    default: return "undecided";
  }
}

struct M5Orbit {
  M5Class cls = M5Class::Undecided;
  M5Run fwd, bwd;
};

// Classifies the orbit of (x, l) on the box entrance face Sigma x {-1}.
inline M5Orbit classify_m5(const M5System& S, const ChartPoint& x, double l, double T_max) {
  M5Orbit o;
  M5State st{x, m5_y_at(S, l, S.tau_in())};
  M5State f = st;
  box_forward(S, f);
  o.fwd = run_m5(S, f, T_max);
  o.fwd.box_crossings += 1;
  o.bwd = run_m5(S, st, -T_max);
  // One decided escape is enough: the orbit leaves V on that side, whatever
  // happens on the other (for instance an image in the uncharted corridor).
  if (o.fwd.escaped && !o.fwd.undecided) o.cls = M5Class::EscapeOmega;
  else if (o.bwd.escaped && !o.bwd.undecided) o.cls = M5Class::EscapeAlpha;
  else if (o.fwd.undecided || o.bwd.undecided) o.cls = M5Class::Undecided;
  else o.cls = M5Class::Stays;
  return o;
}

// ---------- timing constants ----------

// Membership in D_r = {r_cube x < dr_x} plus all other points outside the
// support of H on the U_r side.
inline bool in_D_r(const HParams& H, const ChartPoint& x) {
  if (is_exterior(x)) return true;
  if (x.chart == "r_cube") return x.x(0) < H.dr_x;
  return x.chart.rfind("r_", 0) == 0;
}

// Measured t0: the last time any sampled point of B_r is outside D_r.
inline double measure_t0(const M5System& S, int samples = 200, double horizon = 20.0) {
  const HParams& H = S.P.h;
  double t0 = 0.0;
  for (int i = 0; i < samples; ++i) {
    double u = std::fmod(0.7548776662 * (i + 1), 1.0), v = std::fmod(0.5698402910 * (i + 1), 1.0);
    double th = 2.0 * kPi * u, ph = std::acos(1.0 - 2.0 * v);
    Eigen::Vector3d d(std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th), std::cos(ph));
    double rad = H.ball_r * (i % 2 ? 1.0 : 0.5);
    ChartPoint x{"r_cube", Vec(H.center_r() + rad * d)};
    FlowOptions o;
    o.dt = 5e-3;
    o.record = true;
    FlowResult r = Integrator(*S.X).run(x, horizon, o);
    for (size_t k = 0; k < r.traj.pts.size(); ++k)
      if (!in_D_r(H, r.traj.pts[k])) t0 = std::max(t0, r.traj.t[k]);
  }
  return t0;
}

// Minimum return time of T to itself under Y over sampled l < 0.
inline double measure_return_time(const M5System& S, int samples = 50) {
  SectionSpec sec = rp2_section_T(S.P.rp2);
  double best = 1e300;
  for (int i = 1; i <= samples; ++i) {
    double l = -0.98 * i / samples;
    FlowOptions o;
    o.dt = S.P.dt;
    o.section = &sec;
    FlowResult r = Integrator(*S.Y).run(rp2_T_point(S.P.rp2, l), 100.0, o);
    if (!r.hits.empty()) best = std::min(best, r.t);
  }
  return best;
}

}  // namespace artifact
