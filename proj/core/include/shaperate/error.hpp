#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shaperate {

/// Failure categories shared by every module. The CLI maps these onto exit codes.
enum class ErrorKind {
  kValidation,         // malformed input values (ranges, sizes, signs)
  kConfiguration,      // unsupported or inconsistent problem setup
  kTopology,           // mesh connectivity problems (slits not on edges, ...)
  kParse,              // mesh or config file syntax
  kGeometry,           // contours or supports that hit the outer boundary
  kMeshQuery,          // point location failures
  kDeformationTooLarge,
  kCoercivity,         // indefinite or singular Hessian / stiffness
  kSolver,             // iterative solver did not converge
  kPrecondition,       // stale minimizer, support violations
  kInternal,           // broken invariant that should be unreachable
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Iterative solve failure. Carries the residual history for diagnosis.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, std::vector<double> residual_history);

  const std::vector<double>& residual_history() const noexcept { return history_; }
  double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }

 private:
  std::vector<double> history_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace shaperate
