#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "artifact/dynamics.hpp"

namespace artifact {

inline constexpr double kNearSingularity = 1e-8;
inline constexpr double kRenormInterval = 1.0;

// Unit vector modulo sign: the first component with |v_i| > 1e-14 is positive.
inline Vec canonical_line(Vec v) {
  double n = v.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::OutOfDomain, "zero line direction");
  v /= n;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-14) {
      if (v(i) < 0) v = -v;
      break;
    }
  return v;
}

struct LineElement {
  ChartPoint base;
  Vec line;
  LineElement() = default;
  LineElement(ChartPoint b, const Vec& l) : base(std::move(b)), line(canonical_line(l)) {}
};

// Orthonormal basis of the complement of u (columns).
inline Mat normal_frame(const Vec& u) {
  const Eigen::Index n = u.size();
  // Gram-Schmidt of the coordinate vectors least aligned with u.
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) order.push_back({std::abs(u(i)), i});
  std::sort(order.begin(), order.end());
  Mat N(n, n - 1);
  Eigen::Index k = 0;
  for (auto& [a, i] : order) {
    if (k == n - 1) break;
    Vec e = Vec::Unit(n, i);
    e -= u.normalized() * u.normalized().dot(e);
    for (Eigen::Index j = 0; j < k; ++j) e -= N.col(j) * N.col(j).dot(e);
    if (e.norm() < 1e-8) continue;
    N.col(k++) = e.normalized();
  }
  return N;
}

struct CocycleSegment {
  LineElement start, end;
  double t = 0.0;
  Mat frame0, frame1;  // orthonormal frames of the normal spaces (columns)
  Mat matrix;          // psi_N^t from frame0 to frame1
  double log_h = 0.0;

  Mat reparam() const { return std::exp(log_h) * matrix; }
};

// Frame-error diagnostic: max deviation from orthonormality and from
// orthogonality to the line, over both ends.
inline double frame_error(const CocycleSegment& s) {
  auto err = [](const Mat& F, const Vec& u) {
    Mat G = F.transpose() * F - Mat::Identity(F.cols(), F.cols());
    return std::max(G.cwiseAbs().maxCoeff(), (F.transpose() * u).cwiseAbs().maxCoeff());
  };
  return std::max(err(s.frame0, s.start.line), err(s.frame1, s.end.line));
}

namespace cocycle_detail {

// One chunk: propagates [u | N] by Dphi^dt, returns the new line, the new
// frame from a QR of the projected image, the triangular factor and log|Du|.
inline void advance(const VectorFieldSpec& f, ChartPoint& p, Vec& u, Mat& N, Mat& A, double& log_h, double dt,
                    double step) {
  const Eigen::Index n = u.size();
  Mat M0(n, n);
  M0.col(0) = u;
  M0.rightCols(n - 1) = N;
  FlowOptions o;
  o.dt = step;
  o.with_jacobian = true;
  FlowResult r = Integrator(f).run(p, dt, o, &M0);
  if (r.exited) throw Error(ErrorKind::ExitedAtlas, "cocycle orbit left the atlas at chart " + r.end.chart);
  p = r.end;
  Vec du = r.M.col(0);
  double g = du.norm();
  log_h += std::log(g);
  Vec u1 = du / g;
  Mat B = r.M.rightCols(n - 1);
  B -= u1 * (u1.transpose() * B);
  Eigen::HouseholderQR<Mat> qr(B);
  Mat Q = qr.householderQ() * Mat::Identity(n, n - 1);
  Mat R = Q.transpose() * B;
  // Make the diagonal of R positive so the frame is unique.
  for (Eigen::Index i = 0; i < n - 1; ++i)
    if (R(i, i) < 0) {
      Q.col(i) = -Q.col(i);
      R.row(i) = -R.row(i);
    }
  u = u1;
  N = Q;
  A = R * A;
}

}  // namespace cocycle_detail

// Extended linear Poincare flow over the projective orbit of le. frame0 is
// optional (columns orthonormal and orthogonal to the line); frames are
// carried by QR of the projected images every t_renorm time units.
inline CocycleSegment extended_lpf(const VectorFieldSpec& f, const LineElement& le, double t,
                                   const Mat* frame0 = nullptr, double t_renorm = kRenormInterval,
                                   double dt = kDefaultDt) {
  CocycleSegment s;
  s.start = le;
  s.t = t;
  ChartPoint p = le.base;
  Vec u = le.line;
  Mat N = frame0 ? *frame0 : normal_frame(u);
  s.frame0 = N;
  Mat A = Mat::Identity(N.cols(), N.cols());
  double done = 0.0;
  const double dir = t >= 0 ? 1.0 : -1.0;
  while (std::abs(t) - done > 1e-12) {
    double chunk = std::min(t_renorm, std::abs(t) - done);
    cocycle_detail::advance(f, p, u, N, A, s.log_h, dir * chunk, dt);
    done += chunk;
  }
  s.end.base = p;
  s.end.line = u;  // not canonicalized: the frame is attached to this sign
  s.frame1 = N;
  s.matrix = A;
  return s;
}

inline double reparam_factor(const VectorFieldSpec& f, const LineElement& le, double t, double dt = kDefaultDt) {
  return extended_lpf(f, le, t, nullptr, kRenormInterval, dt).log_h;
}

// Psi^t = h(L, t) psi_N^t; the matrix field of the result holds Psi.
inline CocycleSegment reparam_lpf(const VectorFieldSpec& f, const LineElement& le, double t,
                                  const Mat* frame0 = nullptr, double dt = kDefaultDt) {
  CocycleSegment s = extended_lpf(f, le, t, frame0, kRenormInterval, dt);
  s.matrix = s.reparam();
  return s;
}

// Linear Poincare flow on the regular orbit of x: L = <X(x)>, and the end
// line is taken from the field at phi^t(x) rather than from Dphi.
inline CocycleSegment lpf(const VectorFieldSpec& f, const ChartPoint& x, double t, double dt = kDefaultDt) {
  Vec v = f.eval(x);
  if (v.norm() < kNearSingularity) throw Error(ErrorKind::NearSingularity, "lpf at a near-singular point");
  LineElement le{x, v};
  CocycleSegment s = extended_lpf(f, le, t, nullptr, kRenormInterval, dt);
  Vec v1 = f.eval_raw(s.end.base.chart, s.end.base.x);
  if (v1.norm() < kNearSingularity) throw Error(ErrorKind::NearSingularity, "lpf end point near a singularity");
  Vec u1 = v1.normalized();
  if (u1.dot(s.end.line) < 0) u1 = -u1;
  // Re-project the end frame on <X(phi^t x)>^perp.
  Mat B = s.frame1 - u1 * (u1.transpose() * s.frame1);
  Eigen::HouseholderQR<Mat> qr(B);
  Mat Q = qr.householderQ() * Mat::Identity(B.rows(), B.cols());
  for (Eigen::Index i = 0; i < Q.cols(); ++i)
    if (Q.col(i).dot(s.frame1.col(i)) < 0) Q.col(i) = -Q.col(i);
  s.matrix = (Q.transpose() * s.frame1) * s.matrix;
  s.frame1 = Q;
  s.end.line = u1;
  return s;
}

struct Spectrum {
  std::vector<double> exponents;  // descending
  std::vector<double> times;
  std::vector<std::vector<double>> running;  // running estimates per renormalization
  double spread = 0.0;  // max change of the estimates over the last half of the run
};

// Discrete QR Lyapunov exponents of the tangent flow.
inline Spectrum lyapunov_spectrum(const VectorFieldSpec& f, const ChartPoint& x, double T_total,
                                  double t_renorm = kRenormInterval, double dt = kDefaultDt) {
  const Eigen::Index n = x.x.size();
  Mat Q = Mat::Identity(n, n);
  Vec sums = Vec::Zero(n);
  ChartPoint p = x;
  Spectrum sp;
  double t = 0.0;
  while (T_total - t > 1e-12) {
    double chunk = std::min(t_renorm, T_total - t);
    FlowOptions o;
    o.dt = dt;
    o.with_jacobian = true;
    FlowResult r = Integrator(f).run(p, chunk, o, &Q);
    if (r.exited) throw Error(ErrorKind::ExitedAtlas, "spectrum orbit left the atlas");
    p = r.end;
    Eigen::HouseholderQR<Mat> qr(r.M);
    Mat Qn = qr.householderQ();
    Mat R = Qn.transpose() * r.M;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (R(i, i) < 0) {
        Qn.col(i) = -Qn.col(i);
        R.row(i) = -R.row(i);
      }
      sums(i) += std::log(R(i, i));
    }
    Q = Qn;
    t += chunk;
    std::vector<double> est(n);
    for (Eigen::Index i = 0; i < n; ++i) est[i] = sums(i) / t;
    sp.times.push_back(t);
    sp.running.push_back(est);
  }
  sp.exponents = sp.running.back();
  std::sort(sp.exponents.begin(), sp.exponents.end(), std::greater<>());
  for (size_t k = sp.running.size() / 2; k < sp.running.size(); ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      sp.spread = std::max(sp.spread, std::abs(sp.running[k][i] - sp.running.back()[i]));
  return sp;
}

// Worst margin log(1/2 min_F / max_E) over the segments, with E spanned by the
// dim_E least expanded right singular vectors of each segment matrix.
inline double domination_test(const std::vector<CocycleSegment>& segs, int dim_E) {
  if (segs.empty()) throw Error(ErrorKind::DegenerateFiltration, "no segments");
  double worst = 1e300;
  for (const auto& s : segs) {
    const Eigen::Index d = s.matrix.rows();
    if (dim_E < 1 || dim_E >= d) throw Error(ErrorKind::DegenerateFiltration, "dim_E outside [1, fiber dim)");
    Eigen::JacobiSVD<Mat> svd(s.matrix);
    Vec sv = svd.singularValues();  // descending
    double maxE = sv(d - dim_E), minF = sv(d - dim_E - 1);
    if ((minF - maxE) <= 1e-10 * std::max(minF, 1e-300))
      throw Error(ErrorKind::DegenerateFiltration, fmt::format("singular value gap {} below 1e-10", minF - maxE));
    worst = std::min(worst, std::log(0.5 * minF / maxE));
  }
  return worst;
}

// ---------- cones ----------

// Orthonormal basis of the column span; ConeCollapse if rank deficient.
inline Mat orth_basis(const Mat& A, double tol = 1e-12) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
  Vec sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= tol * sv(0))
    throw Error(ErrorKind::ConeCollapse, fmt::format("cone core lost rank (singular values {} .. {})", sv(0),
                                                     sv(sv.size() - 1)));
  return svd.matrixU();
}

// Principal angles between span(A) and span(B), ascending.
inline std::vector<double> principal_angles(const Mat& A, const Mat& B) {
  Mat Qa = orth_basis(A), Qb = orth_basis(B);
  Eigen::JacobiSVD<Mat> svd(Qa.transpose() * Qb);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    out.push_back(std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0)));
  std::sort(out.begin(), out.end());
  return out;
}

struct Cone {
  Mat core;            // columns span the core subspace
  double angle = 0.3;  // half-angle, radians
};

struct ConeReport {
  double min_angle = 0.0;
  std::vector<double> angles;
  bool pass = false;
  Mat unstable_core, stable_core;  // at the comparison section
  Mat E_s;  // vectors at the section that never enter the unstable cone: complement core
};

inline constexpr double kConeAngleThreshold = 1e-3;

// Transports the unstable cone core by `to_mid_u` (a linear map from the
// fiber at the alpha side to the comparison section) and the stable core by
// `to_mid_s` (from the omega side, backward), projects both on the normal
// space `normal` (orthonormal columns) and compares them.
inline ConeReport cone_transport(const Cone& cu, const Mat& to_mid_u, const Cone& cs, const Mat& to_mid_s,
                                 const Mat& normal) {
  ConeReport r;
  Mat U = normal.transpose() * (to_mid_u * cu.core);
  Mat S = normal.transpose() * (to_mid_s * cs.core);
  r.unstable_core = normal * orth_basis(U);
  r.stable_core = normal * orth_basis(S);
  r.angles = principal_angles(U, S);
  r.min_angle = r.angles.front();
  // The stable space at the section: the part of the fiber orthogonal to
  // nothing in the unstable core, i.e. its orthogonal complement.
  Mat Qu = orth_basis(U);
  Mat P = Mat::Identity(U.rows(), U.rows()) - Qu * Qu.transpose();
  Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeThinU);
  r.E_s = normal * svd.matrixU().leftCols(U.rows() - Qu.cols());
  r.pass = r.min_angle >= kConeAngleThreshold;
  return r;
}

// CSV trace: t, log singular values of the accumulated matrix, log_h.
inline void write_cocycle_trace(std::ostream& os, const VectorFieldSpec& f, const LineElement& le, double T,
                                double t_renorm = kRenormInterval, double dt = kDefaultDt) {
  const Eigen::Index d = le.line.size() - 1;
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",log_sv" << i;
  os << ",log_h\n";
  LineElement cur = le;
  Mat frame = normal_frame(le.line);
  Mat acc = Mat::Identity(d, d);
  double log_h = 0.0, t = 0.0;
  auto emit = [&] {
    Eigen::JacobiSVD<Mat> svd(acc);
    os << fmt::format("{:.10g}", t);
    for (Eigen::Index i = 0; i < d; ++i) os << fmt::format(",{:.10g}", std::log(svd.singularValues()(i)));
    os << fmt::format(",{:.10g}\n", log_h);
  };
  emit();
  while (T - t > 1e-12) {
    double chunk = std::min(t_renorm, T - t);
    CocycleSegment s = extended_lpf(f, cur, chunk, &frame, t_renorm, dt);
    acc = s.matrix * acc;
    log_h += s.log_h;
    cur.base = s.end.base;
    cur.line = s.end.line;
    frame = s.frame1;
    t += chunk;
    emit();
  }
}

}  // namespace artifact
