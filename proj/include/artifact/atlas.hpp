#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "artifact/autodiff.hpp"
#include "artifact/core.hpp"

namespace artifact {

inline constexpr double kChartTol = 1e-9;

struct ChartPoint {
  std::string chart;
  Vec x;
};

struct Chart {
  std::string id;
  int dim = 0;
  Vec lo, hi;
  int priority = 0;  // lower wins when several charts contain a point
  // Optional extra shape constraint; positive inside. Combined with the box by min.
  std::function<double(const Vec&)> shape;

  double depth(const Vec& x) const {
    double d = 1e300;
    for (int i = 0; i < dim; ++i) d = std::min({d, x(i) - lo(i), hi(i) - x(i)});
    if (shape) d = std::min(d, shape(x));
    return d;
  }
  bool contains(const Vec& x, double tol = kChartTol) const { return depth(x) >= -tol; }
};

struct TransitionMap {
  std::string from, to;
  MapFn fwd;
  JacFn jac;  // may be empty: central differences are used instead
  std::function<bool(const Vec&)> in_overlap;

  Mat jacobian(const Vec& x) const { return jac ? jac(x) : fd_jacobian(fwd, x); }
};

class Atlas {
 public:
  explicit Atlas(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void add_chart(Chart c) {
    index_[c.id] = charts_.size();
    charts_.push_back(std::move(c));
  }

  // Registers a transition and its inverse. Overlap predicates are given in
  // the coordinates of the respective source chart.
  void add_transition(TransitionMap fwd, TransitionMap inv) {
    if (trans_.count({fwd.from, fwd.to}) || trans_.count({inv.from, inv.to}))
      throw Error(ErrorKind::NotInOverlap, "duplicate transition " + fwd.from + " <-> " + fwd.to);
    trans_[{fwd.from, fwd.to}] = std::move(fwd);
    trans_[{inv.from, inv.to}] = std::move(inv);
  }

  template <int N, class F, class G>
  void add_transition_ad(const std::string& a, const std::string& b, F f, G g,
                         std::function<bool(const Vec&)> ov_a,
                         std::function<bool(const Vec&)> ov_b) {
    auto [fv, fj] = ad_pair<N>(f);
    auto [gv, gj] = ad_pair<N>(g);
    add_transition(TransitionMap{a, b, fv, fj, std::move(ov_a)},
                   TransitionMap{b, a, gv, gj, std::move(ov_b)});
  }

  // Disjoint union with another atlas (no transitions between the parts).
  void merge(const Atlas& other) {
    for (const Chart& c : other.charts_) add_chart(c);
    for (auto& [k, t] : other.trans_) {
      if (trans_.count(k)) throw Error(ErrorKind::NotInOverlap, "duplicate transition " + k.first + " -> " + k.second);
      trans_[k] = t;
    }
  }

  bool has_chart(const std::string& id) const { return index_.count(id) > 0; }
  const Chart& chart(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::OutOfDomain, "unknown chart " + id);
    return charts_[it->second];
  }
  const std::vector<Chart>& charts() const { return charts_; }

  const TransitionMap* find_transition(const std::string& a, const std::string& b) const {
    auto it = trans_.find({a, b});
    return it == trans_.end() ? nullptr : &it->second;
  }
  std::vector<const TransitionMap*> transitions() const {
    std::vector<const TransitionMap*> out;
    for (auto& [k, t] : trans_) out.push_back(&t);
    return out;
  }
  std::vector<const TransitionMap*> transitions_from(const std::string& a) const {
    std::vector<const TransitionMap*> out;
    for (auto& [k, t] : trans_)
      if (k.first == a) out.push_back(&t);
    return out;
  }

  ChartPoint transition(const ChartPoint& p, const std::string& target) const {
    if (p.chart == target) return p;
    const TransitionMap* t = find_transition(p.chart, target);
    if (!t || !t->in_overlap(p.x))
      throw Error(ErrorKind::NotInOverlap, p.chart + " -> " + target);
    return {target, t->fwd(p.x)};
  }

  // Re-expresses p in the best chart that contains it: p's own chart if it is
  // inside, else the reachable chart with the lowest priority value, ties by
  // larger depth. Returns nullopt if no chart contains the point.
  std::optional<ChartPoint> relocate(const ChartPoint& p, double min_depth = -kChartTol) const {
    const Chart& own = chart(p.chart);
    if (own.depth(p.x) >= 1e-12) return p;
    std::optional<ChartPoint> best;
    int best_pr = 1 << 30;
    double best_d = -1e300;
    for (const TransitionMap* t : transitions_from(p.chart)) {
      if (!t->in_overlap(p.x)) continue;
      Vec y = t->fwd(p.x);
      const Chart& c = chart(t->to);
      double d = c.depth(y);
      if (d < min_depth) continue;
      if (c.priority < best_pr || (c.priority == best_pr && d > best_d)) {
        best = ChartPoint{t->to, y};
        best_pr = c.priority;
        best_d = d;
      }
    }
    if (!best && own.depth(p.x) >= min_depth) return p;
    return best;
  }

 private:
  std::string name_;
  std::vector<Chart> charts_;
  std::map<std::string, size_t> index_;
  std::map<std::pair<std::string, std::string>, TransitionMap> trans_;
};

using AtlasPtr = std::shared_ptr<const Atlas>;

struct FieldRule {
  MapFn eval;
  JacFn jac;  // optional
};

template <int N, class F>
FieldRule make_rule(F f) {
  auto [v, j] = ad_pair<N>(f);
  return FieldRule{v, j};
}

struct SingularityData {
  std::string name;
  ChartPoint location;
  Vec eigenvalues;   // real parts, ascending
  Mat eigenvectors;  // columns, matching eigenvalues
  int s_index = 0;
};

class VectorFieldSpec {
 public:
  VectorFieldSpec(std::string name, AtlasPtr atlas) : name_(std::move(name)), atlas_(std::move(atlas)) {}

  const std::string& name() const { return name_; }
  const Atlas& atlas() const { return *atlas_; }
  AtlasPtr atlas_ptr() const { return atlas_; }

  void set_rule(const std::string& chart, FieldRule r) { rules_[chart] = std::move(r); }
  bool has_rule(const std::string& chart) const { return rules_.count(chart) > 0; }
  void copy_rules(const VectorFieldSpec& other) {
    for (auto& [k, r] : other.rules_) rules_[k] = r;
  }
  // -f on the same atlas; singularities keep their names with negated spectra.
  std::shared_ptr<VectorFieldSpec> negated() const {
    auto g = std::make_shared<VectorFieldSpec>(name_ + "_neg", atlas_);
    for (auto& [k, r] : rules_) {
      FieldRule n;
      MapFn e = r.eval;
      n.eval = [e](const Vec& x) -> Vec { return -e(x); };
      if (r.jac) {
        JacFn j = r.jac;
        n.jac = [j](const Vec& x) -> Mat { return -j(x); };
      }
      g->rules_[k] = n;
    }
    g->params = params;
    for (auto s : singularities) {
      const int n = int(s.eigenvalues.size());
      SingularityData t = s;
      for (int i = 0; i < n; ++i) {
        t.eigenvalues(i) = -s.eigenvalues(n - 1 - i);
        t.eigenvectors.col(i) = s.eigenvectors.col(n - 1 - i);
      }
      t.s_index = n - s.s_index;
      g->singularities.push_back(t);
    }
    return g;
  }

  std::map<std::string, double> params;
  std::vector<SingularityData> singularities;

  // Raw evaluation without the domain check; used inside integrator stages.
  Vec eval_raw(const std::string& chart, const Vec& x) const { return rule(chart).eval(x); }
  Mat jac_raw(const std::string& chart, const Vec& x) const {
    const FieldRule& r = rule(chart);
    return r.jac ? r.jac(x) : fd_jacobian(r.eval, x);
  }
  bool has_analytic_jacobian(const std::string& chart) const { return bool(rule(chart).jac); }

  Vec eval(const ChartPoint& p) const {
    check_domain(p);
    return eval_raw(p.chart, p.x);
  }
  Mat jacobian(const ChartPoint& p) const {
    check_domain(p);
    return jac_raw(p.chart, p.x);
  }
  Mat jacobian_fd(const ChartPoint& p) const {
    check_domain(p);
    return fd_jacobian(rule(p.chart).eval, p.x);
  }

  const SingularityData& singularity(const std::string& n) const {
    for (auto& s : singularities)
      if (s.name == n) return s;
    throw Error(ErrorKind::OutOfDomain, "no singularity " + n);
  }

 private:
  const FieldRule& rule(const std::string& chart) const {
    auto it = rules_.find(chart);
    if (it == rules_.end()) throw Error(ErrorKind::OutOfDomain, name_ + ": no rule on chart " + chart);
    return it->second;
  }
  void check_domain(const ChartPoint& p) const {
    if (!atlas_->chart(p.chart).contains(p.x))
      throw Error(ErrorKind::OutOfDomain, name_ + " at chart " + p.chart);
  }

  std::string name_;
  AtlasPtr atlas_;
  std::map<std::string, FieldRule> rules_;
};

using FieldPtr = std::shared_ptr<const VectorFieldSpec>;

// Eigen-decomposition at a registered zero. Complex pairs keep their real
// parts; callers that need real spectra check the imaginary parts themselves.
inline SingularityData analyze_singularity(const VectorFieldSpec& f, const std::string& name,
                                           const ChartPoint& loc) {
  Mat J = f.jacobian(loc);
  Eigen::EigenSolver<Mat> es(J);
  int n = J.rows();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return es.eigenvalues()(a).real() < es.eigenvalues()(b).real();
  });
  SingularityData s;
  s.name = name;
  s.location = loc;
  s.eigenvalues.resize(n);
  s.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    s.eigenvalues(i) = es.eigenvalues()(order[i]).real();
    s.eigenvectors.col(i) = es.eigenvectors().col(order[i]).real().normalized();
    if (s.eigenvalues(i) < 0) ++s.s_index;
  }
  return s;
}

struct GluingReport {
  double max_mismatch = 0.0;
  int samples = 0;
  std::string worst_pair;
  bool pass = true;
};

// Samples each transition overlap and compares J_T f_A(x) with f_B(T(x)).
inline GluingReport check_gluing(const VectorFieldSpec& f, int samples, uint64_t seed = 1) {
  GluingReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const TransitionMap* t : f.atlas().transitions()) {
    if (!f.has_rule(t->from) || !f.has_rule(t->to)) continue;
    const Chart& a = f.atlas().chart(t->from);
    const Chart& b = f.atlas().chart(t->to);
    int got = 0;
    for (long attempt = 0; attempt < 200L * samples && got < samples; ++attempt) {
      Vec x(a.dim);
      for (int i = 0; i < a.dim; ++i) {
        double lo = std::max(a.lo(i), -50.0), hi = std::min(a.hi(i), 50.0);
        x(i) = lo + (hi - lo) * U(rng);
      }
      if (a.depth(x) < 0 || !t->in_overlap(x)) continue;
      Vec y = t->fwd(x);
      if (b.depth(y) < 0) continue;
      Vec lhs = t->jacobian(x) * f.eval_raw(t->from, x);
      Vec rhs = f.eval_raw(t->to, y);
      double m = (lhs - rhs).norm() / std::max(1.0, rhs.norm());
      if (m > rep.max_mismatch) {
        rep.max_mismatch = m;
        rep.worst_pair = t->from + "->" + t->to;
      }
      ++got;
    }
    rep.samples += got;
  }
  rep.pass = rep.max_mismatch <= 1e-8;
  return rep;
}

// Round-trip error of every declared transition pair on sampled overlap points.
inline double transition_roundtrip_error(const Atlas& atlas, int samples, uint64_t seed = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (const TransitionMap* t : atlas.transitions()) {
    const TransitionMap* back = atlas.find_transition(t->to, t->from);
    if (!back) continue;
    const Chart& a = atlas.chart(t->from);
    int got = 0;
    for (long attempt = 0; attempt < 200L * samples && got < samples; ++attempt) {
      Vec x(a.dim);
      for (int i = 0; i < a.dim; ++i) {
        double lo = std::max(a.lo(i), -50.0), hi = std::min(a.hi(i), 50.0);
        x(i) = lo + (hi - lo) * U(rng);
      }
      if (a.depth(x) < 0 || !t->in_overlap(x)) continue;
      Vec y = t->fwd(x);
      Vec z = back->fwd(y);
      worst = std::max(worst, (z - x).norm() / std::max(1.0, x.norm()));
      ++got;
    }
  }
  return worst;
}

inline double min_transition_singular_value(const Atlas& atlas, int samples, uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 1e300;
  for (const TransitionMap* t : atlas.transitions()) {
    const Chart& a = atlas.chart(t->from);
    int got = 0;
    for (long attempt = 0; attempt < 200L * samples && got < samples; ++attempt) {
      Vec x(a.dim);
      for (int i = 0; i < a.dim; ++i) {
        double lo = std::max(a.lo(i), -50.0), hi = std::min(a.hi(i), 50.0);
        x(i) = lo + (hi - lo) * U(rng);
      }
      if (a.depth(x) < 0 || !t->in_overlap(x)) continue;
      Eigen::JacobiSVD<Mat> svd(t->jacobian(x));
      worst = std::min(worst, svd.singularValues().minCoeff());
      ++got;
    }
  }
  return worst;
}

}  // namespace artifact
