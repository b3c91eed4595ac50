#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "artifact/cocycles.hpp"
#include "artifact/lorenz.hpp"
#include "artifact/parallel.hpp"
#include "artifact/report.hpp"

namespace artifact {

// ---------- strong Lorenz like ----------

// Spectrum in any order. Stable index 2: 0 < -ls < lu < -lss. Unstable
// index 2: -luu < ls < -lu < 0.
inline bool strong_lorenz_like(std::vector<double> l) {
  if (l.size() != 3) throw Error(ErrorKind::NotThreeRealExponents, fmt::format("{} exponents", l.size()));
  for (double v : l)
    if (!std::isfinite(v) || v == 0.0) throw Error(ErrorKind::NotThreeRealExponents, "zero or non-finite exponent");
  std::sort(l.begin(), l.end());
  const int neg = int(std::count_if(l.begin(), l.end(), [](double v) { return v < 0; }));
  if (neg == 2) {
    double lss = l[0], ls = l[1], lu = l[2];
    return 0 < -ls && -ls < lu && lu < -lss;
  }
  if (neg == 1) {
    double ls = l[0], lu = l[1], luu = l[2];
    return -luu < ls && ls < -lu && -lu < 0;
  }
  return false;
}

inline bool strong_lorenz_like(const SingularityData& s) {
  if (s.eigenvalues.size() != 3) throw Error(ErrorKind::NotThreeRealExponents, s.name + " is not 3-dimensional");
  return strong_lorenz_like(std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + 3));
}

// ---------- escaping strong spaces ----------

inline constexpr double kEscapeTmax = 200.0;
inline constexpr double kEscapeRadius = 1e-3;

struct EscapeReport {
  std::string singularity;
  bool stable = true;
  int dim = 0;
  int samples = 0, escaped = 0;
  double max_time = 0.0;
  std::vector<int> stuck;  // sample indices that did not escape within T_max
  bool pass = false;

  json to_json() const {
    return {{"singularity", singularity}, {"side", stable ? "stable" : "unstable"}, {"dim", dim},
            {"samples", samples},         {"escaped", escaped},                     {"max_escape_time", max_time},
            {"stuck", stuck},             {"pass", pass}};
  }
  void enforce() const {
    if (!pass) throw Error(ErrorKind::Inconclusive, fmt::format("{}: {} of {} disc samples stayed", singularity,
                                                                stuck.size(), samples));
  }
};

// Offsets on the punctured disc of radius r in span(V), V orthonormal columns.
inline std::vector<Vec> disc_offsets(const Mat& V, double r, int n) {
  const int j = int(V.cols());
  std::vector<Vec> out;
  for (int k = 0; k < n; ++k) {
    double u = (k + 0.5) / n;
    double rho = r * (0.05 + 0.95 * std::fmod(0.6180339887498949 * (k + 1), 1.0));
    Vec d(j);
    if (j == 1) d << (k % 2 ? -1.0 : 1.0);
    else if (j == 2) d << std::cos(2 * kPi * u), std::sin(2 * kPi * u);
    else if (j == 3) {
      double z = 1.0 - 2.0 * u, a = 2.399963229728653 * k, q = std::sqrt(1.0 - z * z);
      d << q * std::cos(a), q * std::sin(a), z;
    } else {
      throw Error(ErrorKind::ConfigError, "disc sampling supports dimension <= 3");
    }
    out.push_back(rho * (V * d));
  }
  return out;
}

// Runner returns the escape time (time until the orbit leaves U) or a
// negative value if it stays for T_max.
using EscapeRunner = std::function<double(const Vec& offset)>;

inline EscapeReport escaping_from_runner(const std::string& name, bool stable, const Mat& V, EscapeRunner run,
                                         int samples, double radius) {
  EscapeReport rep;
  rep.singularity = name;
  rep.stable = stable;
  rep.dim = int(V.cols());
  rep.samples = samples;
  auto offs = disc_offsets(V, radius, samples);
  auto times = parallel_map<double>(offs.size(), [&](size_t i) { return run(offs[i]); });
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= 0) {
      ++rep.escaped;
      rep.max_time = std::max(rep.max_time, times[i]);
    } else {
      rep.stuck.push_back(int(i));
    }
  }
  rep.pass = rep.escaped == rep.samples;
  return rep;
}

// Strong space of dimension j: the j most contracting eigendirections
// (stable) or the j most expanding ones (unstable).
inline Mat strong_space(const SingularityData& s, bool stable, int j) {
  const int n = int(s.eigenvalues.size());
  Mat V(n, j);
  for (int i = 0; i < j; ++i) V.col(i) = s.eigenvectors.col(stable ? i : n - 1 - i);
  Eigen::HouseholderQR<Mat> qr(V);
  return qr.householderQ() * Mat::Identity(n, j);
}

// Points of the strong stable disc leave U backward in time (their forward
// orbits converge to the singularity); strong unstable discs leave forward.
// `inside` defaults to membership in the atlas of f.
inline EscapeReport escaping_check(const VectorFieldSpec& f, const SingularityData& s, bool stable, int j,
                                   double radius = kEscapeRadius, double T_max = kEscapeTmax, int samples = 200,
                                   std::function<bool(const ChartPoint&)> inside = {}, double dt = 1e-2) {
  Mat V = strong_space(s, stable, j);
  Integrator I(f);
  EscapeRunner run = [&](const Vec& off) {
    FlowOptions o;
    o.dt = dt;
    if (inside) o.stop_when = [&](const ChartPoint& p) { return !inside(p); };
    FlowResult r = I.run({s.location.chart, s.location.x + off}, stable ? -T_max : T_max, o);
    return (r.exited || r.stopped) ? std::abs(r.t) : -1.0;
  };
  return escaping_from_runner(s.name, stable, V, run, samples, radius);
}

struct CenterSpace {
  std::string singularity;
  Mat basis;  // orthonormal columns spanning E^c
  int ss_dim = 0, uu_dim = 0;
  std::vector<EscapeReport> reports;
};

// Candidate strong spaces are the eigen-filtration steps with a strict gap;
// the largest escaping one on each side is removed. For a saddle the whole
// stable (unstable) space is not a candidate: the points of the attractor on
// it form a null set that disc sampling cannot see.
inline CenterSpace center_space_from(const SingularityData& s,
                                     const std::function<EscapeReport(bool stable, int j)>& check) {
  CenterSpace c;
  c.singularity = s.name;
  const int n = int(s.eigenvalues.size());
  const Vec& l = s.eigenvalues;
  const bool saddle = s.s_index > 0 && s.s_index < n;
  for (int j = saddle ? s.s_index - 1 : s.s_index; j >= 1; --j) {
    if (j < n && !(l(j - 1) < l(j) - 1e-9)) continue;
    EscapeReport r = check(true, j);
    c.reports.push_back(r);
    if (r.pass) {
      c.ss_dim = j;
      break;
    }
  }
  const int u_index = n - s.s_index;
  for (int j = saddle ? u_index - 1 : u_index; j >= 1; --j) {
    if (j < n && !(l(n - j) > l(n - j - 1) + 1e-9)) continue;
    EscapeReport r = check(false, j);
    c.reports.push_back(r);
    if (r.pass) {
      c.uu_dim = j;
      break;
    }
  }
  const int m = n - c.ss_dim - c.uu_dim;
  Mat V(n, m);
  for (int i = 0; i < m; ++i) V.col(i) = s.eigenvectors.col(c.ss_dim + i);
  Eigen::HouseholderQR<Mat> qr(V);
  c.basis = m > 0 ? Mat(qr.householderQ() * Mat::Identity(n, m)) : Mat(n, 0);
  return c;
}

inline CenterSpace center_space(const VectorFieldSpec& f, const SingularityData& s,
                                std::function<bool(const ChartPoint&)> inside = {}, int samples = 200) {
  return center_space_from(s, [&](bool stable, int j) {
    return escaping_check(f, s, stable, j, kEscapeRadius, kEscapeTmax, samples, inside);
  });
}

// ---------- periodic orbits of the Lorenz return ----------

struct PeriodicOrbit {
  std::string word;    // branch itinerary, '+' for x > 0
  ChartPoint point;    // on the section w = kLorenzSection
  double period = 0.0;
  double residual = 0.0;
};

// Primitive words up to rotation, lexicographically least representative.
inline std::vector<std::string> lorenz_words(int max_len) {
  std::vector<std::string> out;
  for (int n = 1; n <= max_len; ++n)
    for (int m = 0; m < (1 << n); ++m) {
      std::string w;
      for (int i = 0; i < n; ++i) w += (m >> (n - 1 - i)) & 1 ? '-' : '+';
      bool least = true, primitive = true;
      for (int r = 1; r < n; ++r) {
        std::string rot = w.substr(r) + w.substr(0, r);
        if (rot < w) least = false;
        if (rot == w) primitive = false;
      }
      if (least && primitive) out.push_back(w);
    }
  return out;
}

// Periodic point of the 1-d return for a word, by iterating inverse branches.
// Returns false if the itinerary is not realized.
inline bool lorenz_word_point(const LorenzParams& P, const std::string& w, double& x) {
  const double c = 1.0 - P.zeta;
  auto inv = [&](char br, double y, double& out) {
    double q = br == '+' ? (y + c) / (2.0 * c) : (c - y) / (2.0 * c);
    if (!(q > 0.0 && q < 1.0)) return false;
    double b = P.psi_inv_d(q);
    if (!(b > 0.0)) return false;
    out = (br == '+' ? 1.0 : -1.0) * std::pow(b, 1.0 / P.alpha());
    return true;
  };
  double y = 0.5;
  for (int it = 0; it < 80; ++it)
    for (int i = int(w.size()) - 1; i >= 0; --i)
      if (!inv(w[i], y, y)) return false;
  x = y;
  double z = x;
  for (char br : w) {
    if ((br == '+') != (z > 0)) return false;
    z = P.return_x(z);
  }
  return std::abs(z - x) < 1e-9;
}

// Newton on the n-th return to the section in (x, s), from the 1-d guess.
inline std::optional<PeriodicOrbit> locate_periodic_orbit(const VectorFieldSpec& F, const LorenzParams& P,
                                                          const std::string& word, double dt = kDefaultDt) {
  double x1;
  if (!lorenz_word_point(P, word, x1)) return std::nullopt;
  SectionSpec sec = lorenz_section("a_");
  const double t_in = std::log(kLorenzSection) / P.l3;
  Vec z(2);
  z << x1 * std::exp(P.l1 * t_in), 0.0;
  const int n = int(word.size());
  PeriodicOrbit po;
  po.word = word;
  for (int it = 0; it < 30; ++it) {
    ChartPoint p = cube_point("a_", z(0), kLorenzSection, z(1));
    Mat D = Mat::Identity(3, 3);
    double T = 0.0;
    try {
      for (int k = 0; k < n; ++k) {
        ReturnHit h = return_map(F, sec, p, +1, 50.0, dt);
        D = h.derivative * D;
        T += h.tau;
        p = h.hit;
        if (p.chart != "a_cube") {
          auto q = F.atlas().relocate(p);
          if (!q || q->chart != "a_cube") return std::nullopt;
          p = *q;
        }
      }
    } catch (const Error&) {
      return std::nullopt;
    }
    Vec G(2);
    G << p.x(0) - z(0), p.x(2) - z(1);
    po.residual = G.norm();
    po.period = T;
    po.point = cube_point("a_", z(0), kLorenzSection, z(1));
    if (po.residual < 1e-10) return po;
    Mat J(2, 2);
    J << D(0, 0) - 1.0, D(0, 2), D(2, 0), D(2, 2) - 1.0;
    z -= J.fullPivLu().solve(G);
  }
  return po.residual < 1e-8 ? std::optional<PeriodicOrbit>(po) : std::nullopt;
}

inline std::vector<PeriodicOrbit> lorenz_periodic_orbits(const VectorFieldSpec& F, const LorenzParams& P,
                                                         int max_len = 5, int max_count = 16) {
  auto words = lorenz_words(max_len);
  auto found = parallel_map<std::optional<PeriodicOrbit>>(words.size(),
                                                          [&](size_t i) { return locate_periodic_orbit(F, P, words[i]); });
  std::vector<PeriodicOrbit> out;
  for (auto& f : found)
    if (f && int(out.size()) < max_count) out.push_back(*f);
  return out;
}

// ---------- sampled extended maximal invariant set ----------

struct SampleElement {
  LineElement line;
  std::string component;  // periodic orbit word, seed id, or singularity name
  std::string provenance;
};

struct ExtendedSetSample {
  std::vector<SampleElement> elements;
  std::map<std::string, CenterSpace> centers;
  double min_strong_angle = kPi / 2;  // closest approach of a sampled line to an escaping strong space
  double segment_time = 0.0;
  bool budget_exhausted = false;
};

inline constexpr int kCenterGridLines = 64;

inline double line_subspace_angle(const Vec& u, const Mat& S) {
  Mat Q = orth_basis(S);
  double c = (Q.transpose() * u.normalized()).norm();
  return std::acos(std::clamp(c, 0.0, 1.0));
}

// Seeds are regular points whose orbit segments of length T are lifted by the
// flow direction; periodic orbits first, then extra seeds, until the budget
// of total segment time is used. Center grids are added for every singularity.
inline ExtendedSetSample sample_B(const VectorFieldSpec& f, const std::vector<PeriodicOrbit>& periodic,
                                  const std::vector<ChartPoint>& seeds, const std::vector<CenterSpace>& centers,
                                  double T, double budget, int per_orbit = 4) {
  ExtendedSetSample B;
  auto add_segment_seed = [&](const ChartPoint& x, const std::string& comp, const std::string& prov) {
    if (B.segment_time + T > budget + 1e-9) {
      B.budget_exhausted = true;
      return;
    }
    B.elements.push_back({LineElement(x, f.eval(x)), comp, prov});
    B.segment_time += T;
  };
  for (const PeriodicOrbit& po : periodic) {
    FlowOptions o;
    o.record = true;
    FlowResult r = Integrator(f).run(po.point, po.period, o);
    for (int k = 0; k < per_orbit; ++k) {
      size_t idx = size_t(double(k) / per_orbit * double(r.traj.pts.size() - 1));
      add_segment_seed(r.traj.pts[idx], "periodic " + po.word, fmt::format("periodic orbit {} t={:.3f}", po.word, r.traj.t[idx]));
    }
  }
  for (size_t i = 0; i < seeds.size(); ++i) add_segment_seed(seeds[i], fmt::format("seed {}", i), "seed");
  for (const CenterSpace& c : centers) {
    B.centers[c.singularity] = c;
    const SingularityData& s = f.singularity(c.singularity);
    if (c.basis.cols() != 2) continue;  // projective circle grids only
    for (int k = 0; k < kCenterGridLines; ++k) {
      double a = kPi * k / kCenterGridLines;
      Vec u = std::cos(a) * c.basis.col(0) + std::sin(a) * c.basis.col(1);
      B.elements.push_back({LineElement(s.location, u), "center " + c.singularity, fmt::format("center grid {}", k)});
    }
  }
  // Distance of sampled lines at each singularity to its escaping strong spaces.
  for (const CenterSpace& c : centers) {
    const SingularityData& s = f.singularity(c.singularity);
    std::vector<Mat> strong;
    if (c.ss_dim) strong.push_back(strong_space(s, true, c.ss_dim));
    if (c.uu_dim) strong.push_back(strong_space(s, false, c.uu_dim));
    for (const auto& e : B.elements) {
      if (e.line.base.chart != s.location.chart || (e.line.base.x - s.location.x).norm() > 0.1) continue;
      for (const Mat& S : strong) B.min_strong_angle = std::min(B.min_strong_angle, line_subspace_angle(e.line.line, S));
    }
  }
  return B;
}

// ---------- multisingular hyperbolicity certificate ----------

struct ElementRates {
  std::string component;
  std::vector<double> rates;  // log singular values of Psi^T over T, descending
  int s_index = 0;
};

struct MSHCertificate {
  int s_index = -1;
  double domination_margin = 0.0;   // log(minF / (2 maxE)) at horizon T
  double contraction_margin = 0.0;  // -max rate on N^s
  double expansion_margin = 0.0;    // min rate on N^u
  double horizon = 0.0;
  bool index_uniform = true;
  bool pass = false;
  std::string worst_contraction, worst_expansion;
  std::vector<ElementRates> elements;

  json to_json() const {
    return {{"s_index", s_index},
            {"index_uniform", index_uniform},
            {"horizon", horizon},
            {"margins",
             {{"domination", domination_margin}, {"contraction", contraction_margin}, {"expansion", expansion_margin}}},
            {"worst_contraction", worst_contraction},
            {"worst_expansion", worst_expansion},
            {"elements", elements.size()},
            {"pass", pass}};
  }
  void enforce() const {
    if (!index_uniform) throw Error(ErrorKind::IndexMismatch, "components disagree on the s-index");
    if (!pass) throw Error(ErrorKind::MarginFailure, fmt::format("margins {} {} {}", domination_margin,
                                                                 contraction_margin, expansion_margin));
  }
};

// Log singular values of Psi^T per unit time; the element's own s-index is
// the number of contracted directions.
inline ElementRates element_rates(const Mat& A, double T, const std::string& comp) {
  Eigen::JacobiSVD<Mat> svd(A);
  ElementRates e;
  e.component = comp;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    e.rates.push_back(std::log(svd.singularValues()(i)) / T);
    if (e.rates.back() < 0) ++e.s_index;
  }
  return e;
}

// Margins are measured at one s-index for all elements: `s_index` if given,
// otherwise that of the first periodic-orbit lift, otherwise the most common.
inline MSHCertificate certify_rates(const std::vector<ElementRates>& els, double T, int s_index = -1) {
  MSHCertificate c;
  c.horizon = T;
  c.elements = els;
  if (els.empty()) throw Error(ErrorKind::CertificateMissing, "empty sample");
  const int d = int(els.front().rates.size());
  if (s_index < 0)
    for (const auto& e : els)
      if (e.component.rfind("periodic", 0) == 0) {
        s_index = e.s_index;
        break;
      }
  if (s_index < 0) {
    std::vector<int> votes(d + 1, 0);
    for (const auto& e : els) votes[e.s_index]++;
    s_index = int(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  c.s_index = s_index;
  c.domination_margin = c.contraction_margin = c.expansion_margin = 1e300;
  if (s_index < 1 || s_index >= d) {
    c.index_uniform = false;
    c.pass = false;
    return c;
  }
  for (const auto& e : els) {
    if (e.s_index != s_index) c.index_uniform = false;
    const size_t k = size_t(s_index);
    double maxE = e.rates[d - k], minF = e.rates[d - k - 1];
    c.domination_margin = std::min(c.domination_margin, (minF - maxE) * T - std::log(2.0));
    if (-maxE < c.contraction_margin) c.contraction_margin = -maxE, c.worst_contraction = e.component;
    if (minF < c.expansion_margin) c.expansion_margin = minF, c.worst_expansion = e.component;
  }
  c.pass = c.index_uniform && c.domination_margin > 0 && c.contraction_margin > 0 && c.expansion_margin > 0;
  return c;
}

inline MSHCertificate msh_certificate(const VectorFieldSpec& f, const ExtendedSetSample& B, double T,
                                      int s_index = -1, double dt = kDefaultDt) {
  if (B.elements.empty()) throw Error(ErrorKind::CertificateMissing, "empty sample");
  auto rates = parallel_map<ElementRates>(B.elements.size(), [&](size_t i) {
    CocycleSegment s = reparam_lpf(f, B.elements[i].line, T, nullptr, dt);
    return element_rates(s.matrix, T, B.elements[i].component);
  });
  return certify_rates(rates, T, s_index);
}

// ---------- singular center lines ----------

struct LineRates {
  std::string singularity;
  int eigen = 0;  // index of the eigenline L in the ascending eigen order
  std::vector<double> measured, closed_form;  // descending
  double max_error = 0.0;
  bool sign_pattern = false;  // exactly one positive and one negative rate
};

// Psi rates along an eigenline L of a hyperbolic singularity. On the linear
// chart Psi^t is diagonal with rates lambda(L) + lambda_j over the other
// eigenvalues.
inline LineRates singular_line_rates(const VectorFieldSpec& f, const SingularityData& s, int j, double T = 1.0,
                                     double dt = kDefaultDt) {
  LineRates out;
  out.singularity = s.name;
  out.eigen = j;
  LineElement le(s.location, s.eigenvectors.col(j));
  CocycleSegment seg = reparam_lpf(f, le, T, nullptr, dt);
  out.measured = element_rates(seg.matrix, T, s.name).rates;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    if (i != j) out.closed_form.push_back(s.eigenvalues(j) + s.eigenvalues(i));
  std::sort(out.closed_form.begin(), out.closed_form.end(), std::greater<>());
  int pos = 0, neg = 0;
  for (size_t i = 0; i < out.measured.size(); ++i) {
    out.max_error = std::max(out.max_error, std::abs(out.measured[i] - out.closed_form[i]));
    (out.measured[i] > 0 ? pos : neg)++;
  }
  out.sign_pattern = pos == 1 && neg == 1;
  return out;
}

inline json to_json(const LineRates& r) {
  return {{"singularity", r.singularity}, {"eigen", r.eigen},         {"measured", r.measured},
          {"closed_form", r.closed_form}, {"max_error", r.max_error}, {"sign_pattern", r.sign_pattern}};
}

// Center lines of sigma_a: the unstable eigenline and the weak stable one.
inline std::vector<LineRates> sigma_center_line_rates(const VectorFieldSpec& f, const std::string& sigma = "sigma_a",
                                                      double T = 1.0) {
  const SingularityData& s = f.singularity(sigma);
  const int n = int(s.eigenvalues.size());
  std::vector<LineRates> out;
  // ascending order: strong stable, weak stable, unstable
  for (int j : {n - 1, n - 2}) out.push_back(singular_line_rates(f, s, j, T));
  return out;
}

}  // namespace artifact
