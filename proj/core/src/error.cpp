#include "shaperate/error.hpp"

namespace shaperate {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kTopology: return "topology";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kGeometry: return "geometry";
    case ErrorKind::kMeshQuery: return "mesh_query";
    case ErrorKind::kDeformationTooLarge: return "deformation_too_large";
    case ErrorKind::kCoercivity: return "coercivity";
    case ErrorKind::kSolver: return "solver";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kInternal: return "internal";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

SolverError::SolverError(const std::string& message, std::vector<double> residual_history)
    : Error(ErrorKind::kSolver, message), history_(std::move(residual_history)) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace shaperate
