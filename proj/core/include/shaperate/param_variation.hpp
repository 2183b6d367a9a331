#pragma once

// Finite-dimensional parameter variation of minimized energies.
//
// For a smooth family J(u, mu) that is coercive in u, the optimal value
// J*(mu) = J(u(mu), mu) has derivative d_mu J(u(mu), mu): the chain-rule term
// through u(mu) vanishes because d_u J = 0 at the minimizer. This module
// computes that derivative, the minimizer sensitivity u'(mu), the second
// derivative of J*, and an empirical continuity probe for u(mu).

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace shaperate::param_variation {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Smooth energy family J(u, mu) with user-supplied derivatives.
///
/// All callbacks must be pure and reentrant. `mixed` returns the dim_u x dim_mu
/// matrix of d_mu d_u J; column k is the derivative of grad_u along mu_k.
struct EnergyFamily {
  int dim_u = 0;
  int dim_mu = 0;
  std::function<double(const Vector& u, const Vector& mu)> value;
  std::function<Vector(const Vector& u, const Vector& mu)> grad_u;
  std::function<Matrix(const Vector& u, const Vector& mu)> hess_u;
  std::function<Vector(const Vector& u, const Vector& mu)> grad_mu;
  std::function<Matrix(const Vector& u, const Vector& mu)> mixed;
  std::function<Matrix(const Vector& u, const Vector& mu)> hess_mu;
  double coercivity_floor = 0.0;

  /// Validates dimensions and callbacks, then spot-checks the derivatives
  /// against central finite differences of `value` at five random points.
  /// Throws Error(kValidation) on any inconsistency.
  static EnergyFamily checked(EnergyFamily family, std::uint64_t seed = 0x5eed);
};

struct DerivativeCheckReport {
  double grad_u_error = 0.0;   // max relative error over probes
  double grad_mu_error = 0.0;
  double hess_u_error = 0.0;
  double mixed_error = 0.0;
  double hess_mu_error = 0.0;
  double hess_u_asymmetry = 0.0;

  bool ok(double tol = 1e-6) const;
};

/// FD spot check of all callbacks at `points` random points drawn from
/// [-scale, scale]^dim. First derivatives use a central step of 1e-5 on
/// `value`; second derivatives difference the analytic gradients.
DerivativeCheckReport check_derivatives(const EnergyFamily& family, std::uint64_t seed,
                                        int points = 5, double scale = 1.0);

struct MinimizerRecord {
  Vector mu;
  Vector u_star;
  double residual_norm = 0.0;
  int newton_iters = 0;
  double tolerance = 0.0;
};

/// Damped Newton on u -> J(u, mu) with exact Hessian and Armijo backtracking.
///
/// Throws Error(kCoercivity) if the Hessian is not positive definite on the
/// path or its smallest eigenvalue at the minimizer falls below the declared
/// coercivity floor, and SolverError after `max_iters` iterations.
MinimizerRecord find_minimizer(const EnergyFamily& family, const Vector& mu, const Vector& init,
                               double tol, int max_iters = 50);

/// d_mu J(u(mu), mu). No sensitivity solve is performed.
Vector envelope_derivative(const EnergyFamily& family, const Vector& mu,
                           const MinimizerRecord& record);

/// u'(mu) = -Lambda(mu) h0(mu), with Lambda applied through a Cholesky solve.
Matrix minimizer_sensitivity(const EnergyFamily& family, const Vector& mu,
                             const MinimizerRecord& record);

struct SecondDerivative {
  Matrix value;            // symmetrized
  double asymmetry = 0.0;  // max |H - H^T| before symmetrization
};

/// J*''(mu) = d_mu^2 J - h0^T Lambda h0.
SecondDerivative envelope_second_derivative(const EnergyFamily& family, const Vector& mu,
                                            const MinimizerRecord& record);

struct HolderRow {
  double t = 0.0;
  double displacement = 0.0;  // ||u(mu0 + t dir) - u(mu0)||
  double ratio = 0.0;         // displacement / sqrt(t)
};

struct HolderTable {
  std::vector<HolderRow> rows;
  /// Least-squares slope of log(displacement) against log(t). Empty when any
  /// displacement is exactly zero.
  std::optional<double> loglog_slope;
};

/// Re-minimizes along mu0 + t * direction for each step. Steps must be
/// positive and strictly decreasing. Newton starts from `init`, or from zero
/// when no initial guess is given.
HolderTable holder_probe(const EnergyFamily& family, const Vector& mu0, const Vector& direction,
                         const std::vector<double>& steps, double tol = 1e-12,
                         const std::optional<Vector>& init = std::nullopt);

/// J(u, mu) = 1/2 u^T K u - u^T (f0 + L mu) + 1/2 mu^T P mu + c^T mu.
///
/// The canonical coercive test family; K must be SPD and P symmetric.
struct QuadraticFamilyData {
  Matrix K;
  Vector f0;
  Matrix L;
  Matrix P;
  Vector c;
};

EnergyFamily make_quadratic_family(const QuadraticFamilyData& data);

/// Random well-conditioned quadratic family: smallest eigenvalue of K >= 0.5.
QuadraticFamilyData random_quadratic_data(int dim_u, int dim_mu, std::uint64_t seed);

}  // namespace shaperate::param_variation
