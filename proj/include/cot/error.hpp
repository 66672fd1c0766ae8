#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cot {

enum class ErrorCode {
  InvalidInput,
  DanglingEdge,
  SelfLoop,
  Unreachable,
  NegativeMetric,
  NegativeFlow,
  PathExplosion,
  MassMismatch,
  NonFiniteCost,
  DegenerateDual,
  DecompositionFailure,
  ShapeMismatch,
  SingularSystem,
  PointOutsideDomain,
  DomainTooSmall,
  BisectionFailure,
  Unsupported,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported through this type;
/// the code lets callers (and the CLI) map failures without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Outcome of an iterative solver that returns its best iterate either way.
enum class SolveStatus { Converged, MaxIterations };

}  // namespace cot
