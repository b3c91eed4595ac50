#pragma once

#include <algorithm>
#include <random>

#include "artifact/cocycles.hpp"
#include "support.hpp"

namespace testing_support {

using namespace artifact;

struct LawErrors {
  double semigroup = 0.0, derivative = 0.0, psi_n = 0.0, h_relation = 0.0, psi = 0.0;
  int pairs = 0, skipped = 0;
  double worst() const { return std::max({semigroup, derivative, psi_n, h_relation, psi}); }
};

inline double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, a.norm()); }

// Random (t, s) pairs in [0, t_max]^2 on random points of f. Each law is
// checked as a composition of an independent run over t and one over s
// against a single run over t + s. Frames are compared through N * A, which
// does not depend on the chunk boundaries of the renormalization.
inline LawErrors cocycle_laws(const VectorFieldSpec& f, int n_pairs, uint64_t seed, double t_max = 2.0,
                              double inset = 0.15) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  LawErrors e;
  Integrator I(f);
  FlowOptions o;
  o.with_jacobian = true;
  while (e.pairs < n_pairs) {
    ChartPoint x = random_point(f, rng, inset);
    const double t = t_max * U(rng), s = t_max * U(rng);
    Vec dir = Vec::NullaryExpr(x.x.size(), [&](Eigen::Index) { return U(rng) - 0.5; });
    FlowResult full = I.run(x, t + s, o);
    FlowResult a = I.run(x, t, o);
    if (full.exited || a.exited) {
      ++e.skipped;
      continue;
    }
    FlowResult b = I.run(a.end, s, o);
    if (b.exited || b.end.chart != full.end.chart) {
      ++e.skipped;
      continue;
    }
    e.semigroup = std::max(e.semigroup, (b.end.x - full.end.x).norm() / std::max(1.0, full.end.x.norm()));
    e.derivative = std::max(e.derivative, rel(full.M, b.M * a.M));

    LineElement le(x, dir);
    CocycleSegment S = extended_lpf(f, le, t + s);
    CocycleSegment A1 = extended_lpf(f, le, t);
    LineElement mid;
    mid.base = A1.end.base;
    mid.line = A1.end.line;
    CocycleSegment A2 = extended_lpf(f, mid, s, &A1.frame1);
    if (A2.end.base.chart != S.end.base.chart) {
      ++e.skipped;
      continue;
    }
    e.psi_n = std::max(e.psi_n, rel(S.frame1 * S.matrix, A2.frame1 * A2.matrix * A1.matrix));
    e.h_relation = std::max(e.h_relation, std::abs(S.log_h - (A1.log_h + A2.log_h)) / std::max(1.0, std::abs(S.log_h)));
    Mat psi_full = S.frame1 * S.reparam();
    Mat psi_comp = A2.frame1 * A2.reparam() * A1.reparam();
    e.psi = std::max(e.psi, rel(psi_full, psi_comp));
    ++e.pairs;
  }
  return e;
}

}  // namespace testing_support
