#pragma once

#include <stdexcept>
#include <string>

namespace flagcurv {

/// Error taxonomy. Every failure mode carries a stable code so the CLI can
/// map it to an exit status and a report stage.
enum class ErrorCode {
  InputError,
  DomainError,
  ConvexityViolation,
  InvalidDatum,
  PartitionError,
  SearchFailure,
  HypothesisViolation,
  CoveringFailure,
  DeltaSearchFailure,
  RegionAssignment,
  EpsilonTooLarge,
  DegenerateFlag,
  NotASubalgebra,
  EuclideanFactor,
  BlendingZonePole,
  IoError,
  SchemaError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Convexity failures carry the offending eigenvalue; epsilon failures the margin.
class ConvexityError : public Error {
 public:
  ConvexityError(const std::string& what, double min_eigenvalue)
      : Error(ErrorCode::ConvexityViolation, what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class EpsilonTooLargeError : public Error {
 public:
  EpsilonTooLargeError(const std::string& what, double margin)
      : Error(ErrorCode::EpsilonTooLarge, what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

}  // namespace flagcurv
