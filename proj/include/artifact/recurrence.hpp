#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "artifact/dynamics.hpp"
#include "artifact/parallel.hpp"
#include "artifact/report.hpp"

namespace artifact {

// Coordinate box in one chart. Dimensions listed in `free_dims` are not
// boundaries of the region (polar or angular coordinates whose faces are
// interior points of the manifold); they are skipped by the attracting test.
struct RegionBox {
  std::string chart;
  Vec lo, hi;
  std::vector<int> free_dims;
};

struct RegionSpec {
  std::vector<RegionBox> parts;

  bool contains(const ChartPoint& p) const {
    for (auto& b : parts)
      if (b.chart == p.chart && (p.x.array() >= b.lo.array()).all() && (p.x.array() <= b.hi.array()).all())
        return true;
    return false;
  }
};

inline void check_region(const Atlas& A, const RegionSpec& R) {
  for (auto& b : R.parts) {
    if (!A.has_chart(b.chart)) throw Error(ErrorKind::RegionOutsideAtlas, "no chart " + b.chart);
    const Chart& c = A.chart(b.chart);
    const Eigen::Index d = b.lo.size();
    if (d != c.dim) throw Error(ErrorKind::RegionOutsideAtlas, "dimension mismatch on " + b.chart);
    for (int m = 0; m < (1 << d); ++m) {
      Vec x(d);
      for (Eigen::Index i = 0; i < d; ++i) x(i) = (m >> i) & 1 ? b.hi(i) : b.lo(i);
      if (!c.contains(x)) throw Error(ErrorKind::RegionOutsideAtlas, "region corner outside chart " + b.chart);
    }
  }
}

struct BoxGraph {
  RegionSpec region;
  double delta = 0.0, t_step = 1.0, eps = 0.0, dt = 5e-3;
  int samples = 0;
  struct Part {
    std::vector<int> n;  // boxes per dimension
    int offset = 0;      // first global box id
  };
  std::vector<Part> parts;
  int nboxes = 0;
  std::vector<std::vector<int>> adj;  // sorted successor lists
  std::vector<int> scc;               // component label per box

  std::pair<int, std::vector<int>> locate(int id) const {
    int k = 0;
    while (k + 1 < int(parts.size()) && parts[k + 1].offset <= id) ++k;
    int r = id - parts[k].offset;
    std::vector<int> idx(parts[k].n.size());
    for (int i = int(idx.size()) - 1; i >= 0; --i) {
      idx[i] = r % parts[k].n[i];
      r /= parts[k].n[i];
    }
    return {k, idx};
  }
  int id_of(int k, const std::vector<int>& idx) const {
    int r = 0;
    for (size_t i = 0; i < idx.size(); ++i) r = r * parts[k].n[i] + idx[i];
    return parts[k].offset + r;
  }
  void box_bounds(int id, Vec& lo, Vec& hi) const {
    auto [k, idx] = locate(id);
    const RegionBox& b = region.parts[k];
    lo = b.lo;
    hi = b.lo;
    for (size_t i = 0; i < idx.size(); ++i) {
      double w = (b.hi(i) - b.lo(i)) / parts[k].n[i];
      lo(i) = b.lo(i) + idx[i] * w;
      hi(i) = lo(i) + w;
    }
  }
  ChartPoint center(int id) const {
    Vec lo, hi;
    box_bounds(id, lo, hi);
    return {region.parts[locate(id).first].chart, 0.5 * (lo + hi)};
  }
  double diam(int k) const {
    const RegionBox& b = region.parts[k];
    double s = 0.0;
    for (size_t i = 0; i < parts[k].n.size(); ++i) {
      double w = (b.hi(i) - b.lo(i)) / parts[k].n[i];
      s += w * w;
    }
    return std::sqrt(s);
  }
  // All boxes whose closure lies within r of p.
  std::vector<int> boxes_near(const ChartPoint& p, double r) const {
    std::vector<int> out;
    for (size_t k = 0; k < parts.size(); ++k) {
      const RegionBox& b = region.parts[k];
      if (b.chart != p.chart) continue;
      const size_t d = parts[k].n.size();
      std::vector<int> lo(d), hi(d);
      bool empty = false;
      for (size_t i = 0; i < d; ++i) {
        double w = (b.hi(i) - b.lo(i)) / parts[k].n[i];
        lo[i] = std::max(0, int(std::floor((p.x(i) - r - b.lo(i)) / w)));
        hi[i] = std::min(parts[k].n[i] - 1, int(std::floor((p.x(i) + r - b.lo(i)) / w)));
        if (lo[i] > hi[i]) empty = true;
      }
      if (empty) continue;
      std::vector<int> idx = lo;
      for (;;) {
        double d2 = 0.0;
        for (size_t i = 0; i < d; ++i) {
          double w = (b.hi(i) - b.lo(i)) / parts[k].n[i];
          double a = b.lo(i) + idx[i] * w, c = a + w;
          double e = p.x(i) < a ? a - p.x(i) : (p.x(i) > c ? p.x(i) - c : 0.0);
          d2 += e * e;
        }
        if (d2 <= r * r) out.push_back(id_of(int(k), idx));
        size_t i = d;
        while (i-- > 0) {
          if (++idx[i] <= hi[i]) break;
          idx[i] = lo[i];
        }
        if (i == size_t(-1)) break;
      }
    }
    return out;
  }
};

// Iterative Tarjan; components are labelled in the order they are completed
// when roots are visited in increasing box id.
inline std::vector<int> tarjan_scc(const std::vector<std::vector<int>>& adj) {
  const int n = int(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on(n, 0);
  std::vector<int> stack;
  std::vector<std::pair<int, size_t>> call;
  int counter = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on[root] = 1;
    while (!call.empty()) {
      auto& [v, it] = call.back();
      if (it < adj[v].size()) {
        int w = adj[v][it++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on[w] = 1;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on[w] = 0;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      int done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

struct GraphOptions {
  double dt = 5e-3;
  int threads = 0;
};

// Edges A -> B when the time-t_step image of a sample of A, or the time
// -t_step preimage of a sample of B, lands within eps + diam of the other box.
// The graph of -f is therefore exactly the reverse of the graph of f.
inline BoxGraph build_box_graph(const VectorFieldSpec& f, const RegionSpec& region, double delta, double t_step,
                                double eps, int samples = -1, GraphOptions opt = {}) {
  if (!(delta > 0) || !(eps > 0) || t_step < 1.0)
    throw Error(ErrorKind::ConfigError, "box graph needs delta, eps > 0 and t_step >= 1");
  check_region(f.atlas(), region);
  BoxGraph g;
  g.region = region;
  g.delta = delta;
  g.t_step = t_step;
  g.eps = eps;
  g.dt = opt.dt;
  for (auto& b : region.parts) {
    BoxGraph::Part p;
    p.offset = g.nboxes;
    int cnt = 1;
    for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
      int ni = std::max(1, int(std::lround((b.hi(i) - b.lo(i)) / delta)));
      p.n.push_back(ni);
      cnt *= ni;
    }
    g.parts.push_back(p);
    g.nboxes += cnt;
  }
  const int dim = int(region.parts.front().lo.size());
  g.samples = samples > 0 ? samples : (1 << dim) + 1;
  Integrator I(f);
  FlowOptions fo;
  fo.dt = opt.dt;
  std::vector<std::vector<std::pair<int, int>>> local(g.nboxes);
  parallel_for(
      size_t(g.nboxes),
      [&](size_t bi) {
        int id = int(bi);
        Vec lo, hi;
        g.box_bounds(id, lo, hi);
        auto [k, idx] = g.locate(id);
        const std::string& chart = region.parts[k].chart;
        double slack = eps + g.diam(k);
        std::vector<Vec> pts;
        pts.push_back(0.5 * (lo + hi));
        for (int m = 0; m < (1 << dim) && int(pts.size()) < g.samples; ++m) {
          Vec x(dim);
          for (int i = 0; i < dim; ++i) x(i) = (m >> i) & 1 ? hi(i) : lo(i);
          pts.push_back(x);
        }
        for (const Vec& x : pts) {
          for (double dir : {1.0, -1.0}) {
            FlowResult r = I.run({chart, x}, dir * t_step, fo);
            if (r.exited) continue;
            for (int other : g.boxes_near(r.end, slack))
              local[bi].push_back(dir > 0 ? std::make_pair(id, other) : std::make_pair(other, id));
          }
        }
      },
      opt.threads);
  g.adj.assign(g.nboxes, {});
  for (auto& l : local)
    for (auto& [a, b] : l) g.adj[a].push_back(b);
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  g.scc = tarjan_scc(g.adj);
  return g;
}

struct ChainClass {
  std::vector<int> boxes;  // ascending
  ChartPoint representative;
};

// SCCs with at least one internal edge, ordered by least box.
inline std::vector<ChainClass> chain_classes(const BoxGraph& g) {
  int nc = 0;
  for (int c : g.scc) nc = std::max(nc, c + 1);
  std::vector<std::vector<int>> members(nc);
  for (int v = 0; v < g.nboxes; ++v) members[g.scc[v]].push_back(v);
  std::vector<ChainClass> out;
  for (auto& m : members) {
    bool internal = false;
    for (int v : m) {
      for (int w : g.adj[v])
        if (g.scc[w] == g.scc[v]) {
          internal = true;
          break;
        }
      if (internal) break;
    }
    if (!internal) continue;
    ChainClass c;
    c.boxes = m;
    // Representative: the member box closest to the mean of the centers.
    Vec mean = Vec::Zero(g.center(m[0]).x.size());
    for (int v : m) mean += g.center(v).x;
    mean /= double(m.size());
    int best = m[0];
    double bd = 1e300;
    for (int v : m) {
      double d = (g.center(v).x - mean).norm();
      if (d < bd) bd = d, best = v;
    }
    c.representative = g.center(best);
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const ChainClass& a, const ChainClass& b) { return a.boxes[0] < b.boxes[0]; });
  return out;
}

// Class of a box, or -1 if the box is in no class.
inline int class_index_of(const std::vector<ChainClass>& cls, int box) {
  for (size_t i = 0; i < cls.size(); ++i)
    if (std::binary_search(cls[i].boxes.begin(), cls[i].boxes.end(), box)) return int(i);
  return -1;
}

// Boxes surviving n forward and backward steps inside the graph.
inline std::vector<int> maximal_invariant_boxes(const BoxGraph& g, int n) {
  std::vector<char> alive(g.nboxes, 1);
  std::vector<std::vector<int>> pred(g.nboxes);
  for (int v = 0; v < g.nboxes; ++v)
    for (int w : g.adj[v]) pred[w].push_back(v);
  for (int it = 0; it < n; ++it) {
    std::vector<char> next = alive;
    bool changed = false;
    for (int v = 0; v < g.nboxes; ++v) {
      if (!alive[v]) continue;
      bool s = false, p = false;
      for (int w : g.adj[v]) s |= bool(alive[w]);
      for (int w : pred[v]) p |= bool(alive[w]);
      if (!(s && p)) next[v] = 0, changed = true;
    }
    alive.swap(next);
    if (!changed) break;
  }
  std::vector<int> out;
  for (int v = 0; v < g.nboxes; ++v)
    if (alive[v]) out.push_back(v);
  return out;
}

// U': boxes within `widths` box widths (Chebyshev, per part) of the given set.
inline std::vector<int> fatten_boxes(const BoxGraph& g, const std::vector<int>& ids, int widths = 5) {
  std::vector<char> in(g.nboxes, 0);
  for (int id : ids) {
    auto [k, idx] = g.locate(id);
    const size_t d = idx.size();
    std::vector<int> lo(d), hi(d), cur(d);
    for (size_t i = 0; i < d; ++i) {
      lo[i] = std::max(0, idx[i] - widths);
      hi[i] = std::min(g.parts[k].n[i] - 1, idx[i] + widths);
    }
    cur = lo;
    for (;;) {
      in[g.id_of(k, cur)] = 1;
      size_t i = 0;
      while (i < d && ++cur[i] > hi[i]) cur[i] = lo[i], ++i;
      if (i == d) break;
    }
  }
  std::vector<int> out;
  for (int v = 0; v < g.nboxes; ++v)
    if (in[v]) out.push_back(v);
  return out;
}

// ---------- attracting regions ----------

struct RegionCertificate {
  bool attracting = false;
  double margin = 0.0;  // min clearance of the image of the boundary net
  double t = 0.0;
  int samples = 0;
};

// Images of a boundary net at time t must lie in the interior of the region
// (same chart, positive clearance from every non-free face).
inline RegionCertificate is_attracting_region(const VectorFieldSpec& f, const RegionSpec& R, double t,
                                              int per_edge = 16, double dt = 5e-3) {
  check_region(f.atlas(), R);
  RegionCertificate cert;
  cert.t = t;
  cert.margin = 1e300;
  Integrator I(f);
  FlowOptions fo;
  fo.dt = dt;
  for (const RegionBox& b : R.parts) {
    const int d = int(b.lo.size());
    auto is_free = [&](int i) { return std::find(b.free_dims.begin(), b.free_dims.end(), i) != b.free_dims.end(); };
    for (int face = 0; face < d; ++face) {
      if (is_free(face)) continue;
      for (double side : {0.0, 1.0}) {
        // a face on the chart boundary (a collapsed pole) is not a boundary of the region
        const Chart& ch = f.atlas().chart(b.chart);
        if (side ? b.hi(face) >= ch.hi(face) : b.lo(face) <= ch.lo(face)) continue;
        int total = 1;
        for (int i = 0; i < d - 1; ++i) total *= per_edge + 1;
        for (int m = 0; m < total; ++m) {
          Vec x(d);
          int r = m;
          for (int i = 0; i < d; ++i) {
            if (i == face) {
              x(i) = side ? b.hi(i) : b.lo(i);
              continue;
            }
            double u = double(r % (per_edge + 1)) / per_edge;
            r /= per_edge + 1;
            x(i) = b.lo(i) + u * (b.hi(i) - b.lo(i));
          }
          FlowResult res = I.run({b.chart, x}, t, fo);
          ++cert.samples;
          double clear = -1.0;
          if (!res.exited) {
            ChartPoint y = res.end;
            for (const RegionBox& c : R.parts) {
              if (c.chart != y.chart) continue;
              double cl = 1e300;
              for (int i = 0; i < d; ++i) {
                if (std::find(c.free_dims.begin(), c.free_dims.end(), i) != c.free_dims.end()) continue;
                const Chart& yc = f.atlas().chart(c.chart);
                if (c.lo(i) > yc.lo(i)) cl = std::min(cl, y.x(i) - c.lo(i));
                if (c.hi(i) < yc.hi(i)) cl = std::min(cl, c.hi(i) - y.x(i));
              }
              clear = std::max(clear, cl);
            }
          }
          cert.margin = std::min(cert.margin, clear);
        }
      }
    }
  }
  cert.attracting = cert.margin > 0.0;
  return cert;
}

struct FiltratingNeighborhood {
  RegionSpec region;
  RegionCertificate attracting, repelling;
};

// U = V_a intersect V_r for box regions in matching charts.
inline FiltratingNeighborhood filtrating_neighborhood(const RegionSpec& Va, const RegionCertificate& ca,
                                                      const RegionSpec& Vr, const RegionCertificate& cr) {
  if (!ca.attracting) throw Error(ErrorKind::CertificateMissing, "attracting region not certified");
  if (!cr.attracting) throw Error(ErrorKind::CertificateMissing, "repelling region not certified under -f");
  FiltratingNeighborhood out;
  out.attracting = ca;
  out.repelling = cr;
  for (auto& a : Va.parts)
    for (auto& b : Vr.parts) {
      if (a.chart != b.chart) continue;
      RegionBox c{a.chart, a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi), a.free_dims};
      if ((c.lo.array() < c.hi.array()).all()) out.region.parts.push_back(c);
    }
  return out;
}

// ---------- export ----------

inline json graph_to_json(const BoxGraph& g) {
  json j;
  j["delta"] = g.delta;
  j["t_step"] = g.t_step;
  j["epsilon"] = g.eps;
  j["dt"] = g.dt;
  j["samples_per_box"] = g.samples;
  json parts = json::array();
  for (size_t k = 0; k < g.parts.size(); ++k) {
    const RegionBox& b = g.region.parts[k];
    parts.push_back({{"chart", b.chart},
                     {"lo", std::vector<double>(b.lo.data(), b.lo.data() + b.lo.size())},
                     {"hi", std::vector<double>(b.hi.data(), b.hi.data() + b.hi.size())},
                     {"free_dims", b.free_dims},
                     {"n", g.parts[k].n}});
  }
  j["region"] = parts;
  json edges = json::array();
  for (int v = 0; v < g.nboxes; ++v)
    for (int w : g.adj[v]) edges.push_back({v, w});
  j["boxes"] = g.nboxes;
  j["edges"] = edges;
  j["scc"] = g.scc;
  return j;
}

inline BoxGraph graph_from_json(const json& j) {
  BoxGraph g;
  g.delta = j.at("delta");
  g.t_step = j.at("t_step");
  g.eps = j.at("epsilon");
  g.dt = j.at("dt");
  g.samples = j.at("samples_per_box");
  for (auto& p : j.at("region")) {
    std::vector<double> lo = p.at("lo"), hi = p.at("hi");
    RegionBox b{p.at("chart"), Eigen::Map<Vec>(lo.data(), lo.size()), Eigen::Map<Vec>(hi.data(), hi.size()),
                p.at("free_dims").get<std::vector<int>>()};
    g.region.parts.push_back(b);
    BoxGraph::Part part;
    part.n = p.at("n").get<std::vector<int>>();
    part.offset = g.nboxes;
    int cnt = 1;
    for (int n : part.n) cnt *= n;
    g.parts.push_back(part);
    g.nboxes += cnt;
  }
  g.adj.assign(g.nboxes, {});
  for (auto& e : j.at("edges")) g.adj[e[0].get<int>()].push_back(e[1].get<int>());
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
  g.scc = tarjan_scc(g.adj);
  return g;
}

// One row per class: index, box count, representative chart and coordinates.
inline void write_classes_csv(std::ostream& os, const BoxGraph& g, const std::vector<ChainClass>& cls) {
  const size_t d = g.region.parts.front().lo.size();
  os << "class,boxes,chart";
  for (size_t i = 0; i < d; ++i) os << ",c" << i;
  os << "\n";
  for (size_t k = 0; k < cls.size(); ++k) {
    os << k << "," << cls[k].boxes.size() << "," << cls[k].representative.chart;
    for (size_t i = 0; i < d; ++i) os << fmt::format(",{:.10g}", cls[k].representative.x(i));
    os << "\n";
  }
}

}  // namespace artifact
