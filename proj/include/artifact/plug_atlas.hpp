#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "artifact/plug.hpp"

namespace artifact {

inline constexpr double kPlugPoleRadius = 1.25;  // pole charts cover rho <= 1.25
inline constexpr double kPlugCompletionY = 1.12;
inline constexpr double kBallRadius = 1.1;

namespace plug_detail {

template <class T>
Eigen::Matrix<T, 3, 1> pole_field(const PlugParams& P, const Eigen::Matrix<T, 3, 1>& c, double rot) {
  T q = c(0) * c(0) + c(1) * c(1), rr, th, yd;
  polar_rates(P, q, c(2), rr, th, yd);
  th = th * rot;
  Eigen::Matrix<T, 3, 1> o;
  o(0) = rr * c(0) - th * c(1);
  o(1) = rr * c(1) + th * c(0);
  o(2) = yd;
  return o;
}

// Unit vector on S^2 with polar angle pi s / 2 from the north pole, from a
// pole chart point (u, v). north = false flips the z axis.
inline Eigen::Vector3d pole_to_sphere(double u, double v, bool north) {
  double q = u * u + v * v;
  double sn = (kPi / 2.0) * sinc_sqrt(kPi * kPi * q / 4.0);  // sin(pi rho/2) / rho
  double cz = cos_sqrt(kPi * kPi * q / 4.0);
  return {sn * u, sn * v, north ? cz : -cz};
}

inline Eigen::Vector2d sphere_to_pole(const Eigen::Vector3d& n, bool north) {
  double rxy = std::hypot(n(0), n(1));
  double s = (2.0 / kPi) * std::atan2(rxy, n(2));
  double rho = north ? s : 2.0 - s;
  if (rxy < 1e-300) return {0.0, 0.0};
  return {rho * n(0) / rxy, rho * n(1) / rxy};
}

inline double polar_s(const Eigen::Vector3d& n) {
  return (2.0 / kPi) * std::atan2(std::hypot(n(0), n(1)), n(2));
}

// Ball field weight: 1 near the centre, 1/rho near the rim so that the field
// has unit length there and matches the constant plug field.
template <class T>
T ball_psi(const T& r) {
  T b = smoothstep(T((r - 0.8) / 0.1));
  return (1.0 - b) + b / r;
}

}  // namespace plug_detail

// Builds the plug on S^2 x [-1,1] (completion = false) or the S^3 completion
// with the sink ball a above y = 1 and the source ball r below y = -1.
inline std::shared_ptr<VectorFieldSpec> build_plug(const PlugParams& P, bool completion = false,
                                                   bool check = true, BuildReport* report = nullptr) {
  using namespace plug_detail;
  BuildReport rep = P.checks();
  if (report) *report = rep;
  if (check) rep.enforce();
  const double Y = completion ? kPlugCompletionY : 1.0;
  auto A = std::make_shared<Atlas>(completion ? "S3_plug" : "plug");
  for (const char* id : {"plug_n", "plug_s"}) {
    Chart c{id, 3, Vec(3), Vec(3), 0};
    c.lo << -kPlugPoleRadius, -kPlugPoleRadius, -Y;
    c.hi << kPlugPoleRadius, kPlugPoleRadius, Y;
    c.shape = [](const Vec& x) { return kPlugPoleRadius - std::hypot(x(0), x(1)); };
    A->add_chart(c);
  }
  Chart cyl{"plug_cyl", 3, Vec(3), Vec(3), 2};
  cyl.lo << 0.1, -kPi, -Y;
  cyl.hi << 1.9, kPi, Y;
  A->add_chart(cyl);

  // North <-> south: same rotation angle, rho -> 2 - rho.
  auto swap = [](const auto& c) {
    using T = typename std::decay_t<decltype(c)>::Scalar;
    using std::sqrt;
    T rho = sqrt(c(0) * c(0) + c(1) * c(1));
    T k = (2.0 - rho) / rho;
    Eigen::Matrix<T, 3, 1> o;
    o << k * c(0), k * c(1), c(2);
    return o;
  };
  auto annulus = [](const Vec& c) { return std::hypot(c(0), c(1)) >= 0.75; };
  A->add_transition_ad<3>("plug_n", "plug_s", swap, swap, annulus, annulus);

  for (int north : {1, 0}) {
    std::string id = north ? "plug_n" : "plug_s";
    A->add_transition_ad<3>(
        id, "plug_cyl",
        [north](const auto& c) {
          using T = typename std::decay_t<decltype(c)>::Scalar;
          using std::atan2;
          using std::sqrt;
          T rho = sqrt(c(0) * c(0) + c(1) * c(1));
          Eigen::Matrix<T, 3, 1> o;
          o << (north ? rho : 2.0 - rho), atan2(c(1), c(0)), c(2);
          return o;
        },
        [north](const auto& z) {
          using T = typename std::decay_t<decltype(z)>::Scalar;
          using std::cos;
          using std::sin;
          T rho = north ? T(z(0)) : T(2.0 - z(0));
          Eigen::Matrix<T, 3, 1> o;
          o << rho * cos(z(1)), rho * sin(z(1)), z(2);
          return o;
        },
        [](const Vec& c) { return std::hypot(c(0), c(1)) >= 0.1; },
        [north](const Vec& z) { return north ? z(0) <= kPlugPoleRadius : z(0) >= 2.0 - kPlugPoleRadius; });
  }

  auto F = std::make_shared<VectorFieldSpec>(completion ? "plug_s3" : "plug", A);
  F->set_rule("plug_n", make_rule<3>([P](const auto& c) { return pole_field(P, c.eval(), 1.0); }));
  F->set_rule("plug_s", make_rule<3>([P](const auto& c) { return pole_field(P, c.eval(), -1.0); }));
  F->set_rule("plug_cyl", make_rule<3>([P](const auto& z) {
                using T = typename std::decay_t<decltype(z)>::Scalar;
                using std::cos;
                T sd, yd;
                quotient_rates(P, T(z(0)), T(z(2)), sd, yd);
                T c = cos(kPi * z(0));
                Eigen::Matrix<T, 3, 1> o;
                o << sd, chi(P, T(z(2))) * std::sqrt(2.0) * cos(kPi * z(0) / 2.0) * (1.0 - c) * (1.0 + 0.75 * c),
                    yd;
                return o;
              }));

  if (completion) {
    for (int top : {1, 0}) {
      std::string bid = top ? "ball_a" : "ball_r";
      Chart b{bid, 3, Vec::Constant(3, -kBallRadius), Vec::Constant(3, kBallRadius), 1};
      b.shape = [](const Vec& w) { return kBallRadius - w.norm(); };
      A->add_chart(b);
      for (int north : {1, 0}) {
        std::string pid = north ? "plug_n" : "plug_s";
        MapFn to_ball = [top, north](const Vec& c) -> Vec {
          double r = top ? 2.0 - c(2) : c(2) + 2.0;
          return Vec(r * pole_to_sphere(c(0), c(1), north));
        };
        MapFn to_plug = [top, north](const Vec& w) -> Vec {
          double r = w.norm();
          Eigen::Vector2d uv = sphere_to_pole(w / r, north);
          Vec o(3);
          o << uv(0), uv(1), top ? 2.0 - r : r - 2.0;
          return o;
        };
        auto plug_side = [top](const Vec& c) {
          double y = top ? c(2) : -c(2);
          return y >= 0.96 && y <= 1.1;
        };
        auto ball_side = [north](const Vec& w) {
          double r = w.norm();
          if (r < 0.9 || r > 1.04) return false;
          double s = polar_s(w / r);
          return north ? s <= kPlugPoleRadius : s >= 2.0 - kPlugPoleRadius;
        };
        A->add_transition(TransitionMap{pid, bid, to_ball, {}, plug_side},
                          TransitionMap{bid, pid, to_plug, {}, ball_side});
      }
      double sign = top ? -1.0 : 1.0;
      F->set_rule(bid, make_rule<3>([sign](const auto& w) {
                    using T = typename std::decay_t<decltype(w)>::Scalar;
                    using std::sqrt;
                    T r = sqrt(w.squaredNorm() + 1e-300);
                    T k = sign * ball_psi(r);
                    Eigen::Matrix<T, 3, 1> o;
                    o << k * w(0), k * w(1), k * w(2);
                    return o;
                  }));
    }
  }

  F->params = {{"mu", P.mu}, {"kappa", P.kappa}};
  auto reg = [&](const std::string& n, const std::string& chart, double y) {
    Vec x(3);
    x << 0.0, 0.0, y;
    F->singularities.push_back(analyze_singularity(*F, n, {chart, x}));
  };
  reg("p1", "plug_n", 0.5);
  reg("p2", "plug_n", -0.5);
  reg("p1'", "plug_s", 0.5);
  reg("p2'", "plug_s", -0.5);
  if (completion) {
    reg("a", "ball_a", 0.0);
    reg("r", "ball_r", 0.0);
  }
  return F;
}

}  // namespace artifact
