#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eqf {

enum class ErrorKind {
  ChartDomain,
  DimensionMismatch,
  NonMonotonicTime,
  BehindCamera,
  NumericalFailure,
  NonFiniteJacobian,
  NotPSD,
  SingularInnovation,
  SingularCovariance,
  Misaligned,
  InvalidConfig,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace eqf
