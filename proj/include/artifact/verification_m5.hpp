#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "artifact/m5.hpp"
#include "artifact/verification.hpp"

namespace artifact {

// ---------- orbit classification on Sigma x {-1} ----------

struct M5Sample {
  ChartPoint x;
  double l = 0.0;
  int level = 0;
  double scaled_dist = 0.0;  // max-norm distance to (p, 0), l scaled to the x box
  M5Class cls = M5Class::Undecided;
};

struct M5Classification {
  std::vector<M5Sample> samples;
  std::map<std::string, int> counts;
  std::vector<double> spacing;  // per level
  double escaping_fraction = 0.0;
  bool p_stays = false;          // (p, 0) itself
  bool stayers_concentrate = false;
  double worst_stayer_ratio = 0.0;  // scaled distance / spacing of its level

  json to_json() const {
    json j;
    j["counts"] = counts;
    j["samples"] = samples.size();
    j["escaping_fraction"] = escaping_fraction;
    j["p_stays"] = p_stays;
    j["stayers_concentrate"] = stayers_concentrate;
    j["worst_stayer_ratio"] = worst_stayer_ratio;
    j["spacing"] = spacing;
    return j;
  }
};

inline double radical_inverse(uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * double(i % base);
    i /= base;
  }
  return r;
}

// Three nested boxes around (p, 0): half-widths in x of 0.2, 0.05, 0.0125 and
// in l of 1, 0.25, 0.0625. Points are Halton sequences; (p, 0) is the first
// point of the coarse level.
inline M5Classification m5_orbit_classification(const M5System& S, int n = 1000, double T_max = 100.0,
                                                uint64_t seed = 1) {
  const HParams& H = S.P.h;
  const double hx[3] = {0.2, 0.05, 0.0125}, hl[3] = {1.0, 0.25, 0.0625};
  M5Classification C;
  const Eigen::Vector3d p = H.p_pt();
  for (int lev = 0; lev < 3; ++lev) {
    int m = n / 3 + (lev < n % 3 ? 1 : 0);
    C.spacing.push_back(2.0 * hx[lev] / std::pow(double(m), 0.25));
    for (int i = 0; i < m; ++i) {
      M5Sample s;
      s.level = lev;
      Eigen::Vector3d c = p;
      double l = 0.0;
      if (!(lev == 0 && i == 0)) {
        uint64_t k = uint64_t(i) + seed * 7919ull + uint64_t(lev) * 104729ull;
        c(0) += hx[lev] * (2.0 * radical_inverse(k, 2) - 1.0);
        c(1) += hx[lev] * (2.0 * radical_inverse(k, 3) - 1.0);
        c(2) += hx[lev] * (2.0 * radical_inverse(k, 5) - 1.0);
        l = std::clamp(hl[lev] * (2.0 * radical_inverse(k, 7) - 1.0), -0.999, 0.999);
      }
      c(1) = std::max(c(1), -0.099);  // stay inside the cube
      s.x = {"a_cube", Vec(c)};
      s.l = l;
      s.scaled_dist = std::max((c - p).cwiseAbs().maxCoeff(), std::abs(l) * hx[lev] / hl[lev]);
      C.samples.push_back(s);
    }
  }
  auto cls = parallel_map<M5Class>(C.samples.size(),
                                   [&](size_t i) { return classify_m5(S, C.samples[i].x, C.samples[i].l, T_max).cls; });
  int esc = 0;
  C.stayers_concentrate = true;
  for (auto c : {M5Class::EscapeOmega, M5Class::EscapeAlpha, M5Class::Stays, M5Class::Undecided})
    C.counts[to_string(c)] = 0;
  for (size_t i = 0; i < cls.size(); ++i) {
    M5Sample& s = C.samples[i];
    s.cls = cls[i];
    C.counts[to_string(s.cls)]++;
    if (s.cls == M5Class::EscapeOmega || s.cls == M5Class::EscapeAlpha) ++esc;
    if (s.cls == M5Class::Stays) {
      double ratio = s.scaled_dist / C.spacing[s.level];
      C.worst_stayer_ratio = std::max(C.worst_stayer_ratio, ratio);
      if (ratio > 2.0) C.stayers_concentrate = false;
    }
  }
  C.p_stays = C.samples.front().cls == M5Class::Stays;
  C.escaping_fraction = double(esc) / double(C.samples.size());
  return C;
}

// Orbit of (p, 0) on the box entrance: stays for t in [-T, T].
inline bool m5_p_orbit_stays(const M5System& S, double T = 50.0) {
  ChartPoint x{"a_cube", Vec(S.P.h.p_pt())};
  M5Orbit o = classify_m5(S, x, 0.0, T);
  return o.cls == M5Class::Stays;
}

// ---------- cone transversality along the connecting orbit ----------

struct M5ConeResult {
  ConeReport report;
  double T_alpha = 0.0, T_omega = 0.0;
  std::string chart_alpha, chart_omega;
  json to_json() const {
    return {{"min_angle", report.min_angle},
            {"angles", report.angles},
            {"threshold", kConeAngleThreshold},
            {"T_alpha", T_alpha},
            {"T_omega", T_omega},
            {"pass", report.pass}};
  }
};

namespace m5_detail {

inline Mat block(const Mat& A, const Mat& B) {
  Mat M = Mat::Zero(A.rows() + B.rows(), A.cols() + B.cols());
  M.topLeftCorner(A.rows(), A.cols()) = A;
  M.bottomRightCorner(B.rows(), B.cols()) = B;
  return M;
}

// Box crossing on the entrance face, (x, xi) -> (phi_X^1(r_l(x)), a theta_x(l)).
inline Vec box_section_map(const M5System& S, const Vec& z) {
  const double a = S.P.rp2.a;
  ChartPoint x{"a_cube", z.head(3)};
  double l = z(3) / a;
  HImage im = H_map(S.P.h, x, l);
  FlowResult r = flow(*S.X, im.x, 1.0, S.P.dt);
  Vec out(4);
  out << r.end.x, a * im.l;
  return out;
}

}  // namespace m5_detail

// The unstable cone core at the alpha end (sigma_a, s) is {e_w} x {strip e_y},
// the stable core at the omega end (sigma_r, s) is {e_w} x {strip e_x}. Both
// are carried to the box exit and compared in the normal space of Z there.
inline M5ConeResult m5_cone_transversality(const M5System& S, double T_a = 8.0, double T_r = 8.0) {
  using m5_detail::block;
  M5ConeResult res;
  res.T_alpha = T_a;
  res.T_omega = T_r;
  const HParams& H = S.P.h;
  const double dt = S.P.dt;
  ChartPoint p{"a_cube", Vec(H.p_pt())};
  ChartPoint y_in = m5_y_at(S, 0.0, S.tau_in()), y_out = m5_y_at(S, 0.0, S.tau_out());

  // alpha side
  FlowResult xa = flow(*S.X, p, -T_a, dt), ya = flow(*S.Y, y_in, -T_a, dt);
  if (xa.exited || ya.exited) throw Error(ErrorKind::ExitedAtlas, "alpha end of the connecting orbit");
  res.chart_alpha = xa.end.chart + "|" + ya.end.chart;
  FlowResult JXa = flow_jacobian(*S.X, xa.end, T_a, dt), JYa = flow_jacobian(*S.Y, ya.end, T_a, dt);
  Mat Ma = block(JXa.M, JYa.M);

  // box
  Vec z0(4);
  z0 << p.x, 0.0;
  Mat Dsec(4, 4);
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-6;
    Vec zp = z0, zm = z0;
    zp(k) += h;
    zm(k) -= h;
    Dsec.col(k) = (m5_detail::box_section_map(S, zp) - m5_detail::box_section_map(S, zm)) / (2 * h);
  }
  HImage im = H_map(H, p, 0.0);
  FlowResult xm = flow(*S.X, im.x, 1.0, dt);
  Vec Zin(5), Zout(5);
  Zin << S.X->eval(p), S.Y->eval(y_in);
  Zout << S.X->eval(xm.end), S.Y->eval(y_out);
  Mat Dbox = Mat::Zero(5, 5);
  for (int k = 0; k < 5; ++k) {
    Vec v = Vec::Unit(5, k);
    double alpha = v(4) / Zin(4);
    Vec w = v - alpha * Zin;
    Vec out = alpha * Zout;
    out.head(4) += Dsec * w.head(4);
    Dbox.col(k) = out;
  }

  // omega side: pull back from T_r after the exit
  FlowResult xb = flow(*S.X, xm.end, T_r, dt), yb = flow(*S.Y, y_out, T_r, dt);
  if (xb.exited || yb.exited) throw Error(ErrorKind::ExitedAtlas, "omega end of the connecting orbit");
  res.chart_omega = xb.end.chart + "|" + yb.end.chart;
  FlowResult JXb = flow_jacobian(*S.X, xb.end, -T_r, dt), JYb = flow_jacobian(*S.Y, yb.end, -T_r, dt);
  Mat Mb = block(JXb.M, JYb.M);

  Cone cu, cs;
  cu.core = Mat::Zero(5, 2);
  cu.core(1, 0) = 1.0;  // e_w
  cu.core(4, 1) = 1.0;  // strip e_y
  cs.core = Mat::Zero(5, 2);
  cs.core(1, 0) = 1.0;  // e_w
  cs.core(3, 1) = 1.0;  // strip e_x
  Mat normal = normal_frame(Zout);
  res.report = cone_transport(cu, Dbox * Ma, cs, Mb, normal);
  return res;
}

// ---------- product singularities and the M5 certificate ----------

// Lifts gamma x {s} of periodic orbits and lines of E^c(sigma) x {0} at the
// product singularities: the X cocycle on N_X next to h(L, t) times the Y
// linearization at s.
inline ElementRates m5_periodic_rates(const VectorFieldSpec& X, const VectorFieldSpec& Y, const LineElement& le,
                                      double T, const std::string& comp) {
  const SingularityData& ys = Y.singularity("s");
  CocycleSegment seg = reparam_lpf(X, le, T);
  Mat Dy = (ys.eigenvectors * ys.eigenvalues.cwiseProduct(Vec::Constant(2, T)).array().exp().matrix().asDiagonal() *
            ys.eigenvectors.inverse());
  return element_rates(m5_detail::block(seg.matrix, std::exp(seg.log_h) * Dy), T, comp);
}

struct M5Certificate {
  MSHCertificate rates;
  M5ConeResult cone;
  bool pass = false;
  json to_json() const {
    json j = rates.to_json();
    j["cone"] = cone.to_json();
    j["pass"] = pass;
    return j;
  }
};

// Center grids at (sigma_a, s) and (sigma_r, s), lifts of periodic orbits
// gamma x {s}, and the cone test on the connecting orbit.
inline M5Certificate m5_certificate(const M5System& S, const std::vector<PeriodicOrbit>& periodic,
                                    const std::vector<CenterSpace>& centers, double T = 5.0, int per_orbit = 2) {
  std::vector<std::pair<LineElement, std::string>> jobs;
  for (const PeriodicOrbit& po : periodic) {
    FlowOptions o;
    o.record = true;
    FlowResult r = Integrator(*S.X).run(po.point, po.period, o);
    for (int k = 0; k < per_orbit; ++k) {
      const ChartPoint& q = r.traj.pts[size_t(double(k) / per_orbit * double(r.traj.pts.size() - 1))];
      jobs.push_back({LineElement(q, S.X->eval(q)), "periodic " + po.word + "|s"});
    }
  }
  for (const CenterSpace& c : centers) {
    if (c.basis.cols() != 2) continue;
    const SingularityData& s = S.X->singularity(c.singularity);
    for (int k = 0; k < kCenterGridLines; ++k) {
      double a = kPi * k / kCenterGridLines;
      jobs.push_back({LineElement(s.location, std::cos(a) * c.basis.col(0) + std::sin(a) * c.basis.col(1)),
                      "center " + c.singularity + "|s"});
    }
  }
  auto rates = parallel_map<ElementRates>(
      jobs.size(), [&](size_t i) { return m5_periodic_rates(*S.X, *S.Y, jobs[i].first, T, jobs[i].second); });
  M5Certificate C;
  C.rates = certify_rates(rates, T);
  C.cone = m5_cone_transversality(S);
  C.pass = C.rates.pass && C.cone.report.pass;
  return C;
}

// Center space of (sigma, s) for Z_H from hybrid-orbit escapes of product
// discs. An orbit escapes V when its Y part enters U_alpha or U_omega or its
// S^3 part leaves the charted pieces.
inline CenterSpace m5_center_space(const M5System& S, const std::string& sigma, int samples = 16,
                                   double T_max = kEscapeTmax) {
  const SingularityData& sx = S.X->singularity(sigma);
  const SingularityData& sy = S.Y->singularity("s");
  SingularityData prod;
  prod.name = sigma + "|s";
  std::vector<std::pair<double, Vec>> ev;
  for (int i = 0; i < 3; ++i) {
    Vec v = Vec::Zero(5);
    v.head(3) = sx.eigenvectors.col(i);
    ev.push_back({sx.eigenvalues(i), v});
  }
  for (int i = 0; i < 2; ++i) {
    Vec v = Vec::Zero(5);
    v.tail(2) = sy.eigenvectors.col(i);
    ev.push_back({sy.eigenvalues(i), v});
  }
  std::sort(ev.begin(), ev.end(), [](auto& a, auto& b) { return a.first < b.first; });
  prod.eigenvalues.resize(5);
  prod.eigenvectors.resize(5, 5);
  for (int i = 0; i < 5; ++i) {
    prod.eigenvalues(i) = ev[i].first;
    prod.eigenvectors.col(i) = ev[i].second;
    if (ev[i].first < 0) ++prod.s_index;
  }
  auto check = [&](bool stable, int j) {
    Mat V = strong_space(prod, stable, j);
    EscapeRunner run = [&](const Vec& off) {
      M5State st{{sx.location.chart, sx.location.x + off.head(3)}, {sy.location.chart, sy.location.x + off.tail(2)}};
      M5Run r = run_m5(S, st, stable ? -T_max : T_max);
      if (r.escaped) return std::abs(r.t_escape);
      if (is_exterior(r.end.x)) return std::abs(r.end.t);
      return -1.0;
    };
    return escaping_from_runner(prod.name, stable, V, run, samples, kEscapeRadius);
  };
  return center_space_from(prod, check);
}

// ---------- near-approach scan between manifolds of periodic orbits ----------

struct HomoclinicScan {
  double eps_shift = 0.0;
  double min_distance = 0.0;
  Eigen::Vector3d approach_point = Eigen::Vector3d::Zero();  // cube_a coordinates of the best u sample
  int u_samples = 0;
  bool budget_exhausted = false;
  json to_json() const {
    return {{"eps_shift", eps_shift},
            {"min_distance", min_distance},
            {"approach_point", {approach_point(0), approach_point(1), approach_point(2)}},
            {"u_samples", u_samples},
            {"certifying", false},
            {"budget_exhausted", budget_exhausted}};
  }
};

// Points where W^u(gamma_a) crosses the slice {x = p_x} near B_a, from a
// fundamental domain of the return map's unstable direction iterated forward.
inline std::vector<Eigen::Vector3d> unstable_slice_points(const VectorFieldSpec& X, const LorenzParams& L,
                                                          const PeriodicOrbit& po, const HParams& H, int n_domain,
                                                          int returns, double dt = 5e-3) {
  SectionSpec sec = lorenz_section("a_");
  // unstable eigenvector of the period map
  ChartPoint q = po.point;
  Mat D = Mat::Identity(3, 3);
  for (size_t k = 0; k < po.word.size(); ++k) {
    ReturnHit h = return_map(X, sec, q, +1, 50.0, kDefaultDt);
    D = h.derivative * D;
    q = *X.atlas().relocate(h.hit);
  }
  Mat D2(2, 2);
  D2 << D(0, 0), D(0, 2), D(2, 0), D(2, 2);
  Eigen::EigenSolver<Mat> es(D2);
  int iu = std::abs(es.eigenvalues()(0)) > std::abs(es.eigenvalues()(1)) ? 0 : 1;
  Eigen::Vector2d eu = es.eigenvectors().col(iu).real().normalized();
  double mu = std::abs(es.eigenvalues()(iu).real());
  SectionSpec slice;
  slice.chart = "a_cube";
  const double px = H.p_x;
  slice.level = [px](const Vec& c) { return c(0) - px; };
  slice.orientation = +1;
  const Eigen::Vector3d c0 = H.center_a();
  std::vector<std::vector<Eigen::Vector3d>> found(n_domain);
  parallel_for(size_t(n_domain), [&](size_t i) {
    double d = 1e-3 * std::pow(mu, double(i) / n_domain);
    ChartPoint z = cube_point("a_", po.point.x(0) + d * eu(0), kLorenzSection, po.point.x(2) + d * eu(1));
    FlowOptions o;
    o.dt = dt;
    o.section = &slice;
    o.stop_at_section = false;
    o.tau_min = 0.0;
    // periods needed to spread the domain to unit size, then `returns` more
    double spread = std::ceil(std::log(1e3) / std::log(mu));
    FlowResult r = Integrator(X).run(z, spread * po.period + returns * po.period / double(po.word.size()), o);
    for (const Event& e : r.hits) {
      Eigen::Vector3d c = e.post.x;
      if ((c - c0).norm() <= H.ball_A + 0.02) found[i].push_back(c);
    }
  });
  std::vector<Eigen::Vector3d> out;
  for (auto& f : found) out.insert(out.end(), f.begin(), f.end());
  return out;
}

// Non-certifying: reports how close the box image of sampled W^u(gamma_a)
// points on the slice comes to sampled W^s(gamma_r) points. W^s(gamma_r) in
// cube_r coordinates is the same point set as W^u(gamma_a) in cube_a
// coordinates, since U_r carries -X on identical charts.
inline HomoclinicScan homoclinic_scan(const M5System& S, const PeriodicOrbit& gamma_a, const PeriodicOrbit& gamma_r,
                                      int n_domain = 400, int returns = 12) {
  if (gamma_a.word == gamma_r.word && gamma_a.point.chart == gamma_r.point.chart &&
      (gamma_a.point.x - gamma_r.point.x).norm() < 1e-12)
    throw Error(ErrorKind::ConfigError, "homoclinic_scan needs two distinct periodic orbits");
  const HParams& H = S.P.h;
  auto U = unstable_slice_points(*S.X, S.P.lorenz, gamma_a, H, n_domain, returns);
  auto V = unstable_slice_points(*S.X, S.P.lorenz, gamma_r, H, n_domain, returns);
  HomoclinicScan out;
  out.eps_shift = H.shift_w;
  out.u_samples = int(U.size());
  out.min_distance = 1e300;
  if (U.empty() || V.empty()) {
    out.budget_exhausted = true;
    return out;
  }
  for (const auto& u : U) {
    ChartPoint x{"a_cube", Vec(u)};
    HImage im = H_map(H, x, 0.0);
    if (im.corridor || im.x.chart != "r_cube") continue;
    Eigen::Vector3d y = im.x.x;
    for (const auto& v : V) {
      double d = (y - v).norm() + std::abs(im.l);
      if (d < out.min_distance) out.min_distance = d, out.approach_point = u;
    }
  }
  return out;
}

}  // namespace artifact
