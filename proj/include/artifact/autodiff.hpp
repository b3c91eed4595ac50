#pragma once

#include "artifact/core.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <functional>

namespace artifact {

using MapFn = std::function<Vec(const Vec&)>;
using JacFn = std::function<Mat(const Vec&)>;

// Wraps a generic lambda f(Eigen::Matrix<T, N, 1>) -> Eigen::Matrix<T, M, 1>
// as a plain double map plus its forward-mode Jacobian.
template <int N, int M = N, class F>
std::pair<MapFn, JacFn> ad_pair(F f) {
  MapFn val = [f](const Vec& x) -> Vec {
    Eigen::Matrix<double, N, 1> xs = x;
    Eigen::Matrix<double, M, 1> y = f(xs);
    return Vec(y);
  };
  JacFn jac = [f](const Vec& x) -> Mat {
    using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;
    Eigen::Matrix<AD, N, 1> xa;
    for (int i = 0; i < N; ++i) xa(i) = AD(x(i), N, i);
    Eigen::Matrix<AD, M, 1> ya = f(xa);
    Mat J(M, N);
    for (int i = 0; i < M; ++i) {
      if (ya(i).derivatives().size() == N)
        J.row(i) = ya(i).derivatives().transpose();
      else
        J.row(i).setZero();
    }
    return J;
  };
  return {val, jac};
}

inline Mat fd_jacobian(const MapFn& f, const Vec& x, double h = 1e-6) {
  Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace artifact
