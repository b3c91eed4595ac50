#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "artifact/atlas.hpp"
#include "artifact/config.hpp"
#include "artifact/dynamics.hpp"
#include "artifact/report.hpp"

namespace artifact {

// Y on RP^2. Strip chart [-2,2]^2 with the linear saddle (-lu x, lu y),
// restricted to the region |x y| <= 2a bounded by the orbits through
// (+-a, 2). The top segment |x| <= a is glued to the right segment |y| <= a
// by d(x) = -x through a flow-box collar (coordinates xi = conserved x y / 2,
// tau = flow time). The sink disc u_omega is glued to the bottom segment and
// the source disc u_alpha to the left segment; the remaining disc of RP^2
// carries no recurrence and is not charted.
struct RP2Params {
  double lambda_uuu = 8.0;
  double a = 1.0;
  double nu = 8.0;         // rate of the linear sink and source discs
  double collar_len = 12.0;  // time from the top segment to the right segment
  double tau_T = 6.0;      // collar time of the transverse section T

  static RP2Params from(const ParamFile& pf) {
    RP2Params p;
    p.lambda_uuu = pf.get("lambda_uuu", p.lambda_uuu);
    p.a = pf.get("a", p.a);
    p.nu = pf.get("nu", p.nu);
    p.collar_len = pf.get("collar_len", p.collar_len);
    p.tau_T = pf.get("tau_T", p.tau_T);
    return p;
  }

  double lambda_sss() const { return -lambda_uuu; }

  // Curve endpoints from the closed-form linear flow.
  struct Constants {
    double a_prime, b, b_prime, c;
  };
  Constants constants() const {
    const double lu = lambda_uuu, ls = lambda_sss();
    Constants k;
    // (-a, 2) flowed until |x| = 2.
    double t1 = std::log(2.0 / a) / ls;
    k.a_prime = 2.0 * std::exp(lu * t1);
    // (a, 2) flowed until x = 2.
    k.c = 2.0 * std::exp(lu * t1);
    // (-2, -a') flowed until |y| = 2.
    double t2 = std::log(2.0 / k.a_prime) / lu;
    k.b = 2.0 * std::exp(ls * t2);
    // (2, -c) flowed until |y| = 2.
    double t3 = std::log(2.0 / k.c) / lu;
    k.b_prime = 2.0 * std::exp(ls * t3);
    return k;
  }

  // Minimum return time of T to itself.
  double K_Y_plus_1() const { return collar_len + std::log(2.0 / a) / lambda_uuu; }

  BuildReport checks() const {
    BuildReport r;
    r.name = "rp2";
    r.add("lambda_uuu > 6", lambda_uuu - 6.0);
    r.add("0 < a < 2", std::min(a, 2.0 - a));
    r.add("nu > 0", nu);
    r.add("box fits in collar", std::min(tau_T - 1.0 - 4.5, collar_len - tau_T - 0.5));
    Constants k = constants();
    // The endpoints must close the curve C: every constant equals a when
    // lambda_sss = -lambda_uuu.
    double err = std::max({std::abs(k.a_prime - a), std::abs(k.b - a), std::abs(k.b_prime - a), std::abs(k.c - a)});
    r.add_bool("curve endpoints close within 1e-10", err <= 1e-10, 1e-10 - err);
    return r;
  }
};

inline constexpr double kCollarOverlap = 0.05;

inline std::shared_ptr<VectorFieldSpec> build_rp2_field(const RP2Params& P, bool check = true,
                                                        BuildReport* report = nullptr) {
  BuildReport rep = P.checks();
  if (report) *report = rep;
  if (check) rep.enforce();
  const double lu = P.lambda_uuu, a = P.a, L = P.collar_len, nu = P.nu, k = 1.0 / a;
  const double d = kCollarOverlap, split = 4.0;
  auto A = std::make_shared<Atlas>("RP2");

  Chart strip{"strip", 2, Vec::Constant(2, -2.0), Vec::Constant(2, 2.0), 0};
  strip.shape = [a](const Vec& z) { return 2.0 * a - std::abs(z(0) * z(1)); };
  A->add_chart(strip);
  Chart c1{"collar_1", 2, Vec(2), Vec(2), 1};
  c1.lo << -a, -d;
  c1.hi << a, split + 0.5;
  A->add_chart(c1);
  Chart c2{"collar_2", 2, Vec(2), Vec(2), 1};
  c2.lo << -a, split - 0.5;
  c2.hi << a, L + d;
  A->add_chart(c2);
  for (const char* id : {"u_omega", "u_alpha"}) {
    Chart u{id, 2, Vec(2), Vec(2), 1};
    u.lo << -1.3, -1.3;
    u.hi << 1.3, 1.2;
    A->add_chart(u);
  }

  A->add_transition_ad<2>(
      "collar_1", "collar_2", [](const auto& z) { return z; }, [](const auto& z) { return z; },
      [split](const Vec& z) { return z(1) >= split - 0.5; }, [split](const Vec& z) { return z(1) <= split + 0.5; });

  // Top segment -> collar start.
  A->add_transition_ad<2>(
      "strip", "collar_1",
      [lu](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        using std::log;
        Eigen::Matrix<T, 2, 1> o;
        o << z(0) * z(1) / 2.0, log(z(1) / 2.0) / lu;
        return o;
      },
      [lu](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::Scalar;
        using std::exp;
        Eigen::Matrix<T, 2, 1> o;
        o << c(0) * exp(-lu * c(1)), 2.0 * exp(lu * c(1));
        return o;
      },
      [lu, d](const Vec& z) { return z(1) >= 2.0 * std::exp(-lu * d); },
      [](const Vec& c) { return c(1) <= 0.0; });

  // Collar end -> right segment, reversing orientation.
  A->add_transition_ad<2>(
      "collar_2", "strip",
      [lu, L](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::Scalar;
        using std::exp;
        T sig = c(1) - L;
        Eigen::Matrix<T, 2, 1> o;
        o << 2.0 * exp(-lu * sig), -c(0) * exp(lu * sig);
        return o;
      },
      [lu, L](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        using std::log;
        Eigen::Matrix<T, 2, 1> o;
        o << -z(0) * z(1) / 2.0, L - log(z(0) / 2.0) / lu;
        return o;
      },
      [L](const Vec& c) { return c(1) >= L; }, [lu, d](const Vec& z) { return z(0) >= 2.0 * std::exp(-lu * d); });

  // Bottom segment -> sink disc: flow-box time sigma = ln(|y|/2)/lu <= 0,
  // conserved x |y| / 2, then the linear sink (-nu p, -nu q).
  const double qmax = 1.2;
  A->add_transition_ad<2>(
      "strip", "u_omega",
      [lu, nu, k](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        using std::exp;
        using std::log;
        T sig = log(-z(1) / 2.0) / lu;
        T q = exp(-nu * sig);
        Eigen::Matrix<T, 2, 1> o;
        o << k * (z(0) * (-z(1)) / 2.0) * q, q;
        return o;
      },
      [lu, nu, k](const auto& w) {
        using T = typename std::decay_t<decltype(w)>::Scalar;
        using std::exp;
        using std::log;
        T sig = -log(w(1)) / nu;
        T y = -2.0 * exp(lu * sig);
        Eigen::Matrix<T, 2, 1> o;
        o << (w(0) / (k * w(1))) * 2.0 / (-y), y;
        return o;
      },
      [lu, nu, qmax](const Vec& z) { return z(1) <= -2.0 * std::exp(-lu * std::log(qmax) / nu); },
      [qmax](const Vec& w) { return w(1) >= 1.0 - 1e-3 && w(1) <= qmax && std::abs(w(0)) <= w(1); });

  // Left segment <- source disc, same construction with time reversed.
  A->add_transition_ad<2>(
      "strip", "u_alpha",
      [lu, nu, k](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        using std::exp;
        using std::log;
        T sig = -log(-z(0) / 2.0) / lu;
        T q = exp(nu * sig);
        Eigen::Matrix<T, 2, 1> o;
        o << k * (z(1) * (-z(0)) / 2.0) * q, q;
        return o;
      },
      [lu, nu, k](const auto& w) {
        using T = typename std::decay_t<decltype(w)>::Scalar;
        using std::exp;
        using std::log;
        T sig = log(w(1)) / nu;
        T x = -2.0 * exp(-lu * sig);
        Eigen::Matrix<T, 2, 1> o;
        o << x, (w(0) / (k * w(1))) * 2.0 / (-x);
        return o;
      },
      [lu, nu, qmax](const Vec& z) { return z(0) <= -2.0 * std::exp(-lu * std::log(qmax) / nu); },
      [qmax](const Vec& w) { return w(1) >= 1.0 - 1e-3 && w(1) <= qmax && std::abs(w(0)) <= w(1); });

  auto F = std::make_shared<VectorFieldSpec>("rp2", A);
  F->set_rule("strip", make_rule<2>([lu](const auto& z) {
                using T = typename std::decay_t<decltype(z)>::Scalar;
                Eigen::Matrix<T, 2, 1> o;
                o << -lu * z(0), lu * z(1);
                return o;
              }));
  for (const char* id : {"collar_1", "collar_2"})
    F->set_rule(id, make_rule<2>([](const auto& c) {
                  using T = typename std::decay_t<decltype(c)>::Scalar;
                  Eigen::Matrix<T, 2, 1> o;
                  o << 0.0 * c(0), 1.0 + 0.0 * c(1);
                  return o;
                }));
  for (double sgn : {-1.0, 1.0})
    F->set_rule(sgn < 0 ? "u_omega" : "u_alpha", make_rule<2>([nu, sgn](const auto& w) {
                  using T = typename std::decay_t<decltype(w)>::Scalar;
                  Eigen::Matrix<T, 2, 1> o;
                  o << sgn * nu * w(0), sgn * nu * w(1);
                  return o;
                }));
  F->params = {{"lambda_uuu", lu}, {"a", a}, {"nu", nu}, {"collar_len", L}, {"tau_T", P.tau_T}};
  Vec o = Vec::Zero(2);
  F->singularities.push_back(analyze_singularity(*F, "s", {"strip", o}));
  F->singularities.push_back(analyze_singularity(*F, "omega", {"u_omega", o}));
  F->singularities.push_back(analyze_singularity(*F, "alpha", {"u_alpha", o}));
  return F;
}

// T = {tau = tau_T} in the second collar chart, parametrized by l = xi / a.
inline SectionSpec rp2_section_T(const RP2Params& P) {
  SectionSpec s;
  s.chart = "collar_2";
  double tT = P.tau_T, a = P.a;
  s.level = [tT](const Vec& c) { return c(1) - tT; };
  s.orientation = +1;
  s.coords = [a](const Vec& c) {
    Vec o(1);
    o(0) = c(0) / a;
    return o;
  };
  return s;
}

inline ChartPoint rp2_T_point(const RP2Params& P, double l, double box_coord = 0.0) {
  Vec c(2);
  c << P.a * l, P.tau_T + box_coord;
  return {"collar_2", c};
}

}  // namespace artifact
