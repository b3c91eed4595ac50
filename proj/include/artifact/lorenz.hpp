#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "artifact/atlas.hpp"
#include "artifact/config.hpp"
#include "artifact/dynamics.hpp"
#include "artifact/report.hpp"

namespace artifact {

// Geometric Lorenz region around sigma_a. Cube coordinates (x, w, s): x
// unstable, w weak stable, s strong stable, field diag(l1, l3, l2). Orbits
// leave through the faces x = +-1 into two unit-speed tubes whose far ends
// are glued to the entry face w = 1 by the fold map R.
struct LorenzParams {
  double l1 = 1.7;   // expansion
  double l3 = -1.0;  // weak contraction
  double l2 = -4.5;  // strong contraction
  double half_width = 1.0;
  double zeta = 0.1;      // return image is [-(1-zeta), 1-zeta]
  double eta = 0.1;       // smoothing scale of the fold profile at b = 0
  double tube_len = 1.0;  // transit time through a tube
  double w_min = 0.1;     // cube extends to w = -w_min

  static LorenzParams from(const ParamFile& pf) {
    LorenzParams p;
    p.l1 = pf.get("lambda1", p.l1);
    p.l3 = pf.get("lambda3", p.l3);
    p.l2 = pf.get("lambda2", p.l2);
    p.zeta = pf.get("zeta", p.zeta);
    p.eta = pf.get("eta", p.eta);
    p.tube_len = pf.get("tube_len", p.tube_len);
    return p;
  }

  double alpha() const { return -l3 / l1; }
  double fold_exp() const { return 0.5 * (l1 / -l3 - 1.0); }

  // Fold profile: odd, increasing, psi(1) = 1, psi(b) ~ b^(1/alpha) for b >> eta.
  template <class T>
  T psi(const T& b) const {
    using std::pow;
    double k = fold_exp();
    return b * pow(b * b + eta * eta, k) / std::pow(1.0 + eta * eta, k);
  }
  double dpsi(double b) const {
    double k = fold_exp(), q = b * b + eta * eta;
    return (std::pow(q, k) + 2.0 * k * b * b * std::pow(q, k - 1.0)) / std::pow(1.0 + eta * eta, k);
  }
  double psi_inv_d(double y) const {
    double lo = -3.0, hi = 3.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
      double m = 0.5 * (lo + hi);
      (psi(m) < y ? lo : hi) = m;
    }
    double b = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) b -= (psi(b) - y) / dpsi(b);
    return b;
  }
  // Final Newton step in T so automatic differentiation sees d(psi^-1).
  template <class T>
  T psi_inv(const T& y) const {
    double yd = scalar_of(y);
    double b0 = psi_inv_d(yd);
    return T(b0 - (psi(b0) - y) / dpsi(b0));
  }

  template <class T>
  static double scalar_of(const T& v) {
    if constexpr (std::is_arithmetic_v<T>) return v;
    else return v.value();
  }

  // 1-d return on the entry face for an orbit entering at x with w = 1.
  double return_x(double x) const {
    double b = std::pow(std::abs(x), alpha());
    double c = 1.0 - zeta;
    return x > 0 ? -c + 2.0 * c * psi(b) : c - 2.0 * c * psi(b);
  }
  double return_slope(double x) const {
    double ax = std::abs(x), b = std::pow(ax, alpha());
    return 2.0 * (1.0 - zeta) * dpsi(b) * alpha() * std::pow(ax, alpha() - 1.0);
  }

  BuildReport checks() const {
    BuildReport r;
    r.name = "lorenz";
    r.add("sqrt(2) < lambda1", l1 - std::sqrt(2.0));
    r.add("lambda1 < 2", 2.0 - l1);
    r.add("4 < -lambda2", -l2 - 4.0);
    r.add("-lambda2 < 5", 5.0 + l2);
    r.add("0 < -lambda3", -l3);
    r.add("-lambda3 < lambda1", l1 + l3);
    r.add("lambda1 + lambda3 > 0", l1 + l3);
    r.add("0 < zeta < 1", std::min(zeta, 1.0 - zeta));
    double worst = 1e300;
    if (l1 > 0 && l3 < 0) {
      for (int i = 1; i <= 4000; ++i) {
        double x = (1.0 - zeta) * i / 4000.0;
        worst = std::min(worst, return_slope(x));
      }
    } else {
      worst = 0.0;
    }
    r.add("return expansion >= sqrt(2)", worst - std::sqrt(2.0));
    return r;
  }
};

namespace lorenz_detail {

// Tube exit end map R: (a, b) -> (x', s') on the entry face.
template <class T>
void fold(const LorenzParams& P, int branch, const T& a, const T& b, T& xp, T& sp) {
  double c = 1.0 - P.zeta;
  if (branch > 0) {
    xp = -c + 2.0 * c * P.psi(b);
    sp = 0.5 + 0.25 * a;
  } else {
    xp = c - 2.0 * c * P.psi(b);
    sp = -0.5 + 0.25 * a;
  }
}

}  // namespace lorenz_detail

inline constexpr double kTubeEndOverlapIn = 0.1;
inline constexpr double kTubeEndOverlapOut = 0.02;
inline constexpr double kTubeStartOverlap = 0.1;
inline constexpr double kLorenzSection = 0.95;  // w level of the return section

// Adds cube and tube charts (ids prefix + "cube", prefix + "tube_p", prefix + "tube_m").
inline void add_lorenz_charts(Atlas& A, const LorenzParams& P, const std::string& pre) {
  const double hw = P.half_width * 1.05;
  Chart cube{pre + "cube", 3, Vec(3), Vec(3), 0};
  cube.lo << -hw, -P.w_min, -1.0;
  cube.hi << hw, std::exp(-P.l3 * kTubeEndOverlapOut), 1.0;
  A.add_chart(cube);
  const double L = P.tube_len;
  for (int branch : {+1, -1}) {
    // Each tube is two charts (start half, end half) so that the cube meets
    // each of them through a single transition.
    std::string id = pre + (branch > 0 ? "tube_p" : "tube_m");
    std::string id_end = id + "_end";
    Chart t{id, 3, Vec(3), Vec(3), 1};
    t.lo << -kTubeStartOverlap, -1.2, -P.w_min - 0.02;
    t.hi << 0.6 * L, 1.2, 1.25;
    A.add_chart(t);
    Chart te{id_end, 3, Vec(3), Vec(3), 1};
    te.lo << 0.4 * L, -1.2, -P.w_min - 0.02;
    te.hi << L + kTubeEndOverlapOut, 1.2, 1.25;
    A.add_chart(te);
    A.add_transition_ad<3>(
        id, id_end, [](const auto& u) { return u; }, [](const auto& u) { return u; },
        [=](const Vec& u) { return u(0) >= 0.4 * L; }, [=](const Vec& u) { return u(0) <= 0.6 * L; });
    const double l1 = P.l1, l2 = P.l2, l3 = P.l3;
    const double umax_start = std::log(hw) / l1;
    // Start of tube: flow-box conjugacy near the face x = branch.
    A.add_transition_ad<3>(
        pre + "cube", id,
        [=](const auto& c) {
          using T = typename std::decay_t<decltype(c)>::Scalar;
          using std::log;
          using std::pow;
          T ax = c(0) * double(branch);
          Eigen::Matrix<T, 3, 1> o;
          o(0) = log(ax) / l1;
          o(1) = c(2) * pow(ax, -l2 / l1);
          o(2) = c(1) * pow(ax, -l3 / l1);
          return o;
        },
        [=](const auto& u) {
          using T = typename std::decay_t<decltype(u)>::Scalar;
          using std::exp;
          Eigen::Matrix<T, 3, 1> o;
          o(0) = double(branch) * exp(l1 * u(0));
          o(1) = u(2) * exp(l3 * u(0));
          o(2) = u(1) * exp(l2 * u(0));
          return o;
        },
        [=](const Vec& c) { return c(0) * branch >= std::exp(-kTubeStartOverlap * l1); },
        [=](const Vec& u) { return u(0) <= umax_start && u(0) >= -kTubeStartOverlap - 1e-9; });
    // End of tube: fold onto the entry face.
    A.add_transition_ad<3>(
        id_end, pre + "cube",
        [=](const auto& u) {
          using T = typename std::decay_t<decltype(u)>::Scalar;
          using std::exp;
          T sig = u(0) - L, xp, sp;
          lorenz_detail::fold(P, branch, u(1), u(2), xp, sp);
          Eigen::Matrix<T, 3, 1> o;
          o(0) = xp * exp(l1 * sig);
          o(1) = exp(l3 * sig);
          o(2) = sp * exp(l2 * sig);
          return o;
        },
        [=](const auto& c) {
          using T = typename std::decay_t<decltype(c)>::Scalar;
          using std::exp;
          using std::log;
          T sig = log(c(1)) / l3;
          T xp = c(0) * exp(-l1 * sig), sp = c(2) * exp(-l2 * sig);
          double cc = 1.0 - P.zeta;
          Eigen::Matrix<T, 3, 1> o;
          o(0) = sig + L;
          if (branch > 0) {
            o(1) = (sp - 0.5) / 0.25;
            o(2) = P.psi_inv<T>(T((xp + cc) / (2.0 * cc)));
          } else {
            o(1) = (sp + 0.5) / 0.25;
            o(2) = P.psi_inv<T>(T((cc - xp) / (2.0 * cc)));
          }
          return o;
        },
        [=](const Vec& u) { return u(0) >= L - kTubeEndOverlapIn; },
        [=](const Vec& c) {
          if (c(1) <= 0.0) return false;
          double sig = std::log(c(1)) / l3;
          if (sig < -kTubeEndOverlapOut - 1e-9 || sig > kTubeEndOverlapIn) return false;
          double sp = c(2) * std::exp(-l2 * sig);
          double a = branch > 0 ? (sp - 0.5) / 0.25 : (sp + 0.5) / 0.25;
          if (std::abs(a) > 1.2) return false;
          double xp = c(0) * std::exp(-l1 * sig), cc = 1.0 - P.zeta;
          double y = branch > 0 ? (xp + cc) / (2.0 * cc) : (cc - xp) / (2.0 * cc);
          double b = P.psi_inv_d(y);
          return b >= -P.w_min - 0.02 && b <= 1.25;
        });
  }
}

// sign = +1 for U_a, -1 for the time-reversed copy U_r.
inline void add_lorenz_rules(VectorFieldSpec& F, const LorenzParams& P, const std::string& pre, double sign) {
  const double l1 = P.l1, l2 = P.l2, l3 = P.l3;
  F.set_rule(pre + "cube", make_rule<3>([=](const auto& c) {
               using T = typename std::decay_t<decltype(c)>::Scalar;
               Eigen::Matrix<T, 3, 1> o;
               o(0) = sign * l1 * c(0);
               o(1) = sign * l3 * c(1);
               o(2) = sign * l2 * c(2);
               return o;
             }));
  for (const char* t : {"tube_p", "tube_m", "tube_p_end", "tube_m_end"})
    F.set_rule(pre + t, make_rule<3>([=](const auto& u) {
                 using T = typename std::decay_t<decltype(u)>::Scalar;
                 Eigen::Matrix<T, 3, 1> o;
                 o(0) = sign + 0.0 * u(0);
                 o(1) = 0.0 * u(1);
                 o(2) = 0.0 * u(2);
                 return o;
               }));
}

inline ChartPoint cube_point(const std::string& pre, double x, double w, double s) {
  Vec v(3);
  v << x, w, s;
  return {pre + "cube", v};
}

inline void register_sigma(VectorFieldSpec& F, const std::string& name, const std::string& pre) {
  F.singularities.push_back(analyze_singularity(F, name, cube_point(pre, 0, 0, 0)));
}

// build_lorenz validates the parameters; pass check = false only for
// deliberate negative controls.
inline std::shared_ptr<VectorFieldSpec> build_lorenz(const LorenzParams& P, bool check = true,
                                                     BuildReport* report = nullptr) {
  BuildReport r = P.checks();
  if (report) *report = r;
  if (check) r.enforce();
  auto A = std::make_shared<Atlas>("U_a");
  add_lorenz_charts(*A, P, "a_");
  auto F = std::make_shared<VectorFieldSpec>("lorenz", A);
  add_lorenz_rules(*F, P, "a_", +1.0);
  F->params = {{"lambda1", P.l1}, {"lambda3", P.l3}, {"lambda2", P.l2}, {"zeta", P.zeta}};
  register_sigma(*F, "sigma_a", "a_");
  return F;
}

inline std::shared_ptr<VectorFieldSpec> build_lorenz_reversed(const LorenzParams& P, bool check = true) {
  if (check) P.checks().enforce();
  auto A = std::make_shared<Atlas>("U_r");
  add_lorenz_charts(*A, P, "r_");
  auto F = std::make_shared<VectorFieldSpec>("lorenz_reversed", A);
  add_lorenz_rules(*F, P, "r_", -1.0);
  register_sigma(*F, "sigma_r", "r_");
  return F;
}

inline SectionSpec lorenz_section(const std::string& pre) {
  SectionSpec s;
  s.chart = pre + "cube";
  s.level = [](const Vec& c) { return kLorenzSection - c(1); };
  s.orientation = +1;
  s.coords = [](const Vec& c) {
    Vec o(2);
    o << c(0), c(2);
    return o;
  };
  return s;
}

}  // namespace artifact
