// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fmica {

enum class ErrorKind {
  InvalidInput,
  SingularCovariance,
  DegenerateUpdate,
  MaxIterExceeded,
  BothGaussian,
  AmbiguousAlignment,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::DegenerateUpdate: return "DegenerateUpdate";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::BothGaussian: return "BothGaussian";
    case ErrorKind::AmbiguousAlignment: return "AmbiguousAlignment";
  }
  return "Unknown";
}

/// Library error carrying a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a covariance-like matrix has an eigenvalue below the
/// positive-definiteness threshold.
class SingularCovarianceError : public Error {
 public:
  SingularCovarianceError(double eigenvalue, double threshold)
      : Error(ErrorKind::SingularCovariance,
              "eigenvalue " + std::to_string(eigenvalue) + " <= threshold " +
                  std::to_string(threshold)),
        eigenvalue_(eigenvalue) {}

  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

}  // namespace fmica
