#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace foliascan {

enum class ErrorCode {
  InvalidInput,
  // mesh-geometry
  DegenerateFace,
  NonManifoldEdge,
  NotDiskTopology,
  IndexOutOfRange,
  SolverFailure,
  OutsideDomain,
  BeyondReach,
  NoConvergence,
  // structured-light
  InsufficientBits,
  InvalidScene,
  TooFewPoints,
  EmptyOverlap,
  // impedance-control / planner
  NonFiniteState,
  EmptyTrajectory,
  // harness
  ConfigError,
  EmptyRun,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace foliascan
