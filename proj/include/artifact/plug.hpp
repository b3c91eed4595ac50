#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "artifact/atlas.hpp"
#include "artifact/config.hpp"
#include "artifact/report.hpp"

namespace artifact {

// Plug on S^2 x [-1,1]. Polar angle s in [0,2] (s = 0 north pole, s = 1
// equator), rotation angle theta, height y. In the quotient (s, y) the field
// is a Morse-Smale planar field with p1 = (0, 1/2) source, p2 = (0, -1/2) sink
// and saddle p3 = (1/2, 0); the half s in [1,2] is its mirror copy.
struct PlugParams {
  double mu = 0.9;      // shape of the saddle-connection profile m(w)
  double kappa = 0.15;  // strength of the polar component
  double cut_lo = 0.8;  // the field is (0,0,1) for |y| >= cut_lo + cut_w
  double cut_w = 0.15;
  double eps_q = 0.1;  // corner point q = (1, 1 - eps_q), recorded only

  static PlugParams from(const ParamFile& pf) {
    PlugParams p;
    p.mu = pf.get("mu", p.mu);
    p.kappa = pf.get("kappa", p.kappa);
    p.cut_lo = pf.get("cut_lo", p.cut_lo);
    p.cut_w = pf.get("cut_w", p.cut_w);
    p.eps_q = pf.get("eps_q", p.eps_q);
    return p;
  }

  // Rotation profile f on [0,1]; extended to [0,2] by f(2 - s) = -f(s).
  static double f(double s) {
    double c = std::cos(kPi * s);
    return std::sqrt(2.0) * std::cos(kPi * s / 2.0) * (1.0 - c) * (1.0 + 0.75 * c);
  }
  static double df(double s, double h = 1e-6) { return (f(s + h) - f(s - h)) / (2.0 * h); }

  double m(double w) const { return 1.0 - w - mu * std::sin(2.0 * kPi * w) / (2.0 * kPi); }

  BuildReport checks() const {
    BuildReport r;
    r.name = "plug";
    r.add("0 < mu < 1", std::min(mu, 1.0 - mu));
    r.add("kappa > 0", kappa);
    r.add("cutoff inside (0,1)", std::min(cut_lo, 1.0 - cut_lo - cut_w));
    r.add_bool("f(0) = 0", std::abs(f(0.0)) < 1e-12, -std::abs(f(0.0)));
    r.add_bool("f(1/2) = 1", std::abs(f(0.5) - 1.0) < 1e-12, -std::abs(f(0.5) - 1.0));
    r.add_bool("f(1) = 0", std::abs(f(1.0)) < 1e-12, -std::abs(f(1.0)));
    double worst = 1e300;
    for (int i = 1; i <= 1000; ++i) worst = std::min(worst, -df(0.5 + 0.5 * i / 1000.0));
    r.add("f' < 0 on (1/2, 1]", worst);
    // m strictly decreasing makes p3 the only zero on the y = 0 line.
    r.add("m' < 0", 1.0 - mu);
    return r;
  }

  double chi(double y) const { return 1.0 - smoothstep((std::abs(y) - cut_lo) / cut_w); }
};

namespace plug_detail {

template <class T>
T K(const T& y) {
  return 2.0 * y - (4.0 / 3.0) * y * y * y;
}
template <class T>
T Kp(const T& y) {
  return 2.0 - 4.0 * y * y;
}

template <class T>
T chi(const PlugParams& P, const T& y) {
  using std::abs;
  return 1.0 - smoothstep(T((abs(y) - P.cut_lo) / P.cut_w));
}

// Polar rate divided by rho, rotation rate and vertical rate for a chart
// centred on a pole, written in q = rho^2 (rho = distance from that pole in
// s units). Returns (rho'/rho, theta', y') with theta' for the north chart.
template <class T>
void polar_rates(const PlugParams& P, const T& q, const T& y, T& rr, T& th, T& yd) {
  using std::sin;
  T c = cos_sqrt(T(kPi * kPi * q));        // cos(pi rho)
  T ch = cos_sqrt(T(kPi * kPi * q / 4.0)); // cos(pi rho / 2)
  T snc = sinc_sqrt(T(kPi * kPi * q));     // sin(pi rho) / (pi rho)
  T w = (1.0 - c) / 2.0;
  T m = 1.0 - w - P.mu * sin(2.0 * kPi * w) / (2.0 * kPi);
  T x = chi(P, y);
  rr = x * P.kappa * (kPi / 2.0) * kPi * snc * K(y);
  th = x * std::sqrt(2.0) * ch * (1.0 - c) * (1.0 + 0.75 * c);
  yd = 1.0 + x * (-Kp(y) * m);
}

// Quotient field (s', y') on [0,2] x [-1,1].
template <class T>
void quotient_rates(const PlugParams& P, const T& s, const T& y, T& sd, T& yd) {
  using std::cos;
  using std::sin;
  T c = cos(kPi * s);
  T w = (1.0 - c) / 2.0;
  T m = 1.0 - w - P.mu * sin(2.0 * kPi * w) / (2.0 * kPi);
  T x = chi(P, y);
  sd = x * P.kappa * (kPi / 2.0) * sin(kPi * s) * K(y);
  yd = 1.0 + x * (-Kp(y) * m);
}

}  // namespace plug_detail

}  // namespace artifact
