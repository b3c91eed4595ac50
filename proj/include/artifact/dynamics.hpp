#pragma once

#include <fmt/format.h>

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "artifact/atlas.hpp"

namespace artifact {

inline constexpr double kDefaultDt = 1e-3;
inline constexpr double kEventTol = 1e-10;
inline constexpr double kTauMin = 1e-3;

struct SectionSpec {
  std::string chart;
  std::function<double(const Vec&)> level;  // section = {level = 0}
  int orientation = +1;                     // sign of d(level)/dt along the forward flow
  MapFn coords;                             // in-section coordinates (optional)
};

struct Event {
  double t = 0.0;
  std::string kind;  // "chart", "section", "exit"
  ChartPoint pre, post;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<ChartPoint> pts;
  std::vector<Event> events;
};

struct FlowOptions {
  double dt = kDefaultDt;
  bool record = false;
  bool with_jacobian = false;
  const SectionSpec* section = nullptr;
  bool stop_at_section = true;
  double tau_min = kTauMin;
  std::function<bool(const ChartPoint&)> stop_when;  // checked after every step
};

struct FlowResult {
  ChartPoint end;
  Mat M;  // Dphi applied to the initial frame (identity unless given)
  double t = 0.0;  // signed elapsed time
  bool exited = false;
  bool stopped = false;  // stop_when fired
  std::vector<Event> hits;
  Trajectory traj;
};

class Integrator {
 public:
  explicit Integrator(const VectorFieldSpec& f) : f_(f) {}

  // One RK4 step of signed size h in chart c; M (if given) follows the
  // variational equation dM/dt = Df(x) M.
  void step(const std::string& c, const Vec& x, const Mat* M, double h, Vec& xo, Mat* Mo) const {
    Vec k1 = f_.eval_raw(c, x);
    Vec x2 = x + 0.5 * h * k1;
    Vec k2 = f_.eval_raw(c, x2);
    Vec x3 = x + 0.5 * h * k2;
    Vec k3 = f_.eval_raw(c, x3);
    Vec x4 = x + h * k3;
    Vec k4 = f_.eval_raw(c, x4);
    xo = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (M && Mo) {
      Mat J1 = f_.jac_raw(c, x), J2 = f_.jac_raw(c, x2), J3 = f_.jac_raw(c, x3), J4 = f_.jac_raw(c, x4);
      Mat m1 = J1 * *M;
      Mat m2 = J2 * (*M + 0.5 * h * m1);
      Mat m3 = J3 * (*M + 0.5 * h * m2);
      Mat m4 = J4 * (*M + h * m3);
      *Mo = *M + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
  }

  FlowResult run(const ChartPoint& p0, double T, const FlowOptions& opt,
                 const Mat* M0 = nullptr) const {
    const Atlas& atlas = f_.atlas();
    FlowResult res;
    ChartPoint p = p0;
    if (!atlas.chart(p.chart).contains(p.x)) {
      auto q = atlas.relocate(p);
      if (!q) throw Error(ErrorKind::OutOfDomain, "initial point outside atlas in " + p.chart);
      p = *q;
    }
    bool jac = opt.with_jacobian;
    Mat M;
    if (jac) M = M0 ? *M0 : Mat(Mat::Identity(p.x.size(), p.x.size()));
    const double dir = T >= 0 ? 1.0 : -1.0;
    double remaining = std::abs(T), elapsed = 0.0;
    int stalls = 0;
    auto record = [&](double tt, const ChartPoint& q) {
      if (opt.record) {
        res.traj.t.push_back(tt);
        res.traj.pts.push_back(q);
      }
    };
    record(0.0, p);
    while (remaining > 1e-14) {
      double h = std::min(opt.dt, remaining);
      const Chart& c = atlas.chart(p.chart);
      Vec x1;
      Mat M1;
      step(p.chart, p.x, jac ? &M : nullptr, dir * h, x1, jac ? &M1 : nullptr);
      // If the step leaves the chart, shorten it to the boundary crossing.
      const bool inside = c.depth(x1) >= 0.0;
      double hstep = h;
      Vec xh = x1;
      Mat Mh = M1;
      if (!inside) {
        double lo = 0.0, hi = h;
        while (hi - lo > kEventTol) {
          double mid = 0.5 * (lo + hi);
          Vec xm;
          Mat Mm;
          step(p.chart, p.x, jac ? &M : nullptr, dir * mid, xm, jac ? &Mm : nullptr);
          if (c.depth(xm) >= 0.0) {
            lo = mid;
          } else {
            hi = mid;
            xh = xm;
            Mh = Mm;
          }
        }
        hstep = hi;
      }
      // Section crossing inside [0, hstep].
      if (opt.section && opt.section->chart == p.chart && elapsed + hstep >= opt.tau_min) {
        double g0 = opt.section->level(p.x), g1 = opt.section->level(xh);
        bool crossed = (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
        double sg = (g1 - g0) * dir;
        if (crossed && ((sg > 0) == (opt.section->orientation > 0))) {
          double lo = 0.0, hi = hstep;
          Vec xs = xh;
          Mat Ms = Mh;
          while (hi - lo > kEventTol) {
            double mid = 0.5 * (lo + hi);
            Vec xm;
            Mat Mm;
            step(p.chart, p.x, jac ? &M : nullptr, dir * mid, xm, jac ? &Mm : nullptr);
            double gm = opt.section->level(xm);
            if ((g0 < 0) ? gm >= 0 : gm <= 0) {
              hi = mid;
              xs = xm;
              Ms = Mm;
            } else {
              lo = mid;
            }
          }
          if (elapsed + hi >= opt.tau_min) {
            Event e{dir * (elapsed + hi), "section", {p.chart, xs}, {p.chart, xs}};
            res.hits.push_back(e);
            if (opt.record) res.traj.events.push_back(e);
            if (opt.stop_at_section) {
              res.end = {p.chart, xs};
              if (jac) res.M = Ms;
              res.t = dir * (elapsed + hi);
              record(res.t, res.end);
              return res;
            }
          }
        }
      }
      if (inside) {
        p.x = x1;
        if (jac) M = M1;
        remaining -= h;
        elapsed += h;
        stalls = 0;
        record(dir * elapsed, p);
        if (opt.stop_when && opt.stop_when(p)) {
          res.stopped = true;
          break;
        }
        continue;
      }
      const double hi = hstep;
      ChartPoint pre{p.chart, xh};
      auto q = atlas.relocate(pre, -1e-7);
      remaining -= hi;
      elapsed += hi;
      // A switch must move the point deeper; two charts sharing the exit
      // face would otherwise hand it back and forth.
      if (!q || q->chart == p.chart || atlas.chart(q->chart).depth(q->x) <= c.depth(xh)) {
        Event e{dir * elapsed, "exit", pre, pre};
        if (opt.record) res.traj.events.push_back(e);
        res.exited = true;
        p = pre;
        if (jac) M = Mh;
        break;
      }
      if (jac) {
        const TransitionMap* t = atlas.find_transition(p.chart, q->chart);
        M = t->jacobian(xh) * Mh;
      }
      Event e{dir * elapsed, "chart", pre, *q};
      if (opt.record) res.traj.events.push_back(e);
      p = *q;
      record(dir * elapsed, p);
      if (hi < 1e-9) {
        if (++stalls > 64) throw Error(ErrorKind::StepUnderflow, "chart switching stalled at " + p.chart);
      } else {
        stalls = 0;
      }
    }
    res.end = p;
    if (jac) res.M = M;
    res.t = dir * elapsed;
    return res;
  }

 private:
  const VectorFieldSpec& f_;
};

inline FlowResult flow(const VectorFieldSpec& f, const ChartPoint& x, double t, double dt = kDefaultDt,
                       bool record = false) {
  FlowOptions o;
  o.dt = dt;
  o.record = record;
  return Integrator(f).run(x, t, o);
}

inline FlowResult flow_jacobian(const VectorFieldSpec& f, const ChartPoint& x, double t,
                                double dt = kDefaultDt) {
  FlowOptions o;
  o.dt = dt;
  o.with_jacobian = true;
  return Integrator(f).run(x, t, o);
}

struct ReturnHit {
  ChartPoint hit;
  double tau = 0.0;
  Mat derivative;  // Dphi^tau projected along the field onto the section tangent
};

// First crossing of the section in the given time direction. The derivative
// is the full-space matrix (I - v n^T / n.v) Dphi^tau, v the field at the hit
// and n the level-set gradient.
inline ReturnHit return_map(const VectorFieldSpec& f, const SectionSpec& sec, const ChartPoint& x,
                            int direction, double t_max, double dt = kDefaultDt,
                            double tau_min = kTauMin) {
  FlowOptions o;
  o.dt = dt;
  o.with_jacobian = true;
  o.section = &sec;
  o.tau_min = tau_min;
  FlowResult r = Integrator(f).run(x, direction * t_max, o);
  if (r.hits.empty()) throw Error(ErrorKind::NoReturn, fmt::format("no crossing within t_max={}", t_max));
  ReturnHit out;
  out.hit = r.end;
  out.tau = std::abs(r.t);
  Vec v = f.eval_raw(r.end.chart, r.end.x);
  Vec n = fd_jacobian([&](const Vec& y) { Vec g(1); g(0) = sec.level(y); return g; }, r.end.x).row(0).transpose();
  Mat P = Mat::Identity(v.size(), v.size()) - v * n.transpose() / n.dot(v);
  out.derivative = P * r.M;
  return out;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  size_t dim = tr.pts.empty() ? 0 : tr.pts.front().x.size();
  os << "t,chart";
  for (size_t i = 0; i < dim; ++i) os << ",c" << i;
  os << ",event\n";
  auto emit = [&](double t, const ChartPoint& p, const std::string& tag) {
    os << fmt::format("{:.17g},{}", t, p.chart);
    for (int i = 0; i < p.x.size(); ++i) os << fmt::format(",{:.17g}", p.x(i));
    os << "," << tag << "\n";
  };
  for (size_t i = 0; i < tr.pts.size(); ++i) emit(tr.t[i], tr.pts[i], "");
  for (const Event& e : tr.events) emit(e.t, e.post, e.kind);
}

}  // namespace artifact
