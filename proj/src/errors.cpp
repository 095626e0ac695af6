#include "eqf/errors.hpp"

namespace eqf {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ChartDomain: return "ChartDomain";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NonFiniteJacobian: return "NonFiniteJacobian";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::Misaligned: return "Misaligned";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace eqf
