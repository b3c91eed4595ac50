#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace artifact {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
  NotInOverlap,
  OutOfDomain,
  ParamOutOfRange,
  TransversalityFailure,
  IsotopyMismatch,
  ShiftTooLarge,
  GluingConstraintViolated,
  StepUnderflow,
  NoReturn,
  NoCrossing,
  ExitedAtlas,
  RegionOutsideAtlas,
  CertificateMissing,
  NearSingularity,
  DegenerateFiltration,
  ConeCollapse,
  NotThreeRealExponents,
  Inconclusive,
  BudgetExhausted,
  IndexMismatch,
  MarginFailure,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotInOverlap: return "NotInOverlap";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorKind::TransversalityFailure: return "TransversalityFailure";
    case ErrorKind::IsotopyMismatch: return "IsotopyMismatch";
    case ErrorKind::ShiftTooLarge: return "ShiftTooLarge";
    case ErrorKind::GluingConstraintViolated: return "GluingConstraintViolated";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::NoReturn: return "NoReturn";
    case ErrorKind::NoCrossing: return "NoCrossing";
    case ErrorKind::ExitedAtlas: return "ExitedAtlas";
    case ErrorKind::RegionOutsideAtlas: return "RegionOutsideAtlas";
    case ErrorKind::CertificateMissing: return "CertificateMissing";
    case ErrorKind::NearSingularity: return "NearSingularity";
    case ErrorKind::DegenerateFiltration: return "DegenerateFiltration";
    case ErrorKind::ConeCollapse: return "ConeCollapse";
    case ErrorKind::NotThreeRealExponents: return "NotThreeRealExponents";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::BudgetExhausted: return "BudgetExhausted";
    case ErrorKind::IndexMismatch: return "IndexMismatch";
    case ErrorKind::MarginFailure: return "MarginFailure";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kPi = 3.14159265358979323846;

// Quintic smoothstep on [0,1], clamped outside. C2 with zero first and
// second derivatives at both ends.
template <class T>
T smoothstep(const T& t) {
  if (t <= 0.0) return T(0.0) * t;
  if (t >= 1.0) return T(0.0) * t + 1.0;
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

inline double smoothstep_d(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

// cos(sqrt(q)) and sin(sqrt(q))/sqrt(q), smooth in q at q = 0. Needed for
// fields written in Cartesian coordinates around a rotation axis.
template <class T>
T cos_sqrt(const T& q) {
  using std::cos;
  using std::sqrt;
  if (q < 1e-4) {
    T term = T(1.0) + 0.0 * q, sum = term;
    for (int k = 1; k <= 6; ++k) {
      term = term * (-q) / double((2 * k - 1) * (2 * k));
      sum = sum + term;
    }
    return sum;
  }
  return cos(sqrt(q));
}

template <class T>
T sinc_sqrt(const T& q) {
  using std::sin;
  using std::sqrt;
  if (q < 1e-4) {
    T term = T(1.0) + 0.0 * q, sum = term;
    for (int k = 1; k <= 6; ++k) {
      term = term * (-q) / double((2 * k) * (2 * k + 1));
      sum = sum + term;
    }
    return sum;
  }
  T r = sqrt(q);
  return sin(r) / r;
}

}  // namespace artifact
