#include "foliascan/error.hpp"

namespace foliascan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::NonManifoldEdge: return "NonManifoldEdge";
    case ErrorCode::NotDiskTopology: return "NotDiskTopology";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::BeyondReach: return "BeyondReach";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InsufficientBits: return "InsufficientBits";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace foliascan
