#include "shaperate/param_variation.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "shaperate/error.hpp"

namespace shaperate::param_variation {
namespace {

constexpr double kFirstStep = 1e-5;

double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

double rel_err(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

void require_dims(const EnergyFamily& family, const Vector& mu) {
  if (mu.size() != family.dim_mu) {
    fail(ErrorKind::kValidation, "parameter vector has wrong dimension");
  }
}

Eigen::LLT<Matrix> factor_hessian(const EnergyFamily& family, const Vector& u, const Vector& mu) {
  const Matrix hess = family.hess_u(u, mu);
  Eigen::LLT<Matrix> llt(hess);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::kCoercivity, "Hessian d_u^2 J is not positive definite");
  }
  return llt;
}

void require_fresh(const EnergyFamily& family, const Vector& mu, const MinimizerRecord& record) {
  require_dims(family, mu);
  if (record.u_star.size() != family.dim_u) {
    fail(ErrorKind::kPrecondition, "minimizer record has wrong dimension");
  }
  const double residual = family.grad_u(record.u_star, mu).norm();
  const double allowed = std::max(record.tolerance, record.residual_norm);
  if (!(residual <= allowed * (1.0 + 1e-8) + 1e-300)) {
    std::ostringstream msg;
    msg << "stale minimizer record: |d_u J| = " << residual << " exceeds " << allowed;
    fail(ErrorKind::kPrecondition, msg.str());
  }
}

}  // namespace

bool DerivativeCheckReport::ok(double tol) const {
  return grad_u_error <= tol && grad_mu_error <= tol && hess_u_error <= tol &&
         mixed_error <= tol && hess_mu_error <= tol && hess_u_asymmetry <= 1e-12;
}

DerivativeCheckReport check_derivatives(const EnergyFamily& family, std::uint64_t seed, int points,
                                        double scale) {
  DerivativeCheckReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  const double h = kFirstStep;

  for (int p = 0; p < points; ++p) {
    Vector u(family.dim_u), mu(family.dim_mu);
    for (auto& x : u) x = dist(rng);
    for (auto& x : mu) x = dist(rng);

    const Vector gu = family.grad_u(u, mu);
    const Vector gm = family.grad_mu(u, mu);
    const Matrix hu = family.hess_u(u, mu);
    const Matrix mx = family.mixed(u, mu);
    const Matrix hm = family.hess_mu(u, mu);

    for (int i = 0; i < family.dim_u; ++i) {
      Vector up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const double fd = (family.value(up, mu) - family.value(um, mu)) / (2 * h);
      report.grad_u_error = std::max(report.grad_u_error, rel_err(gu[i], fd));
      const Vector dg = (family.grad_u(up, mu) - family.grad_u(um, mu)) / (2 * h);
      report.hess_u_error = std::max(report.hess_u_error, rel_err(Matrix(hu.col(i)), Matrix(dg)));
    }
    for (int k = 0; k < family.dim_mu; ++k) {
      Vector mp = mu, mm = mu;
      mp[k] += h;
      mm[k] -= h;
      const double fd = (family.value(u, mp) - family.value(u, mm)) / (2 * h);
      report.grad_mu_error = std::max(report.grad_mu_error, rel_err(gm[k], fd));
      const Vector dgu = (family.grad_u(u, mp) - family.grad_u(u, mm)) / (2 * h);
      report.mixed_error = std::max(report.mixed_error, rel_err(Matrix(mx.col(k)), Matrix(dgu)));
      const Vector dgm = (family.grad_mu(u, mp) - family.grad_mu(u, mm)) / (2 * h);
      report.hess_mu_error = std::max(report.hess_mu_error, rel_err(Matrix(hm.col(k)), Matrix(dgm)));
    }
    report.hess_u_asymmetry =
        std::max(report.hess_u_asymmetry,
                 hu.size() ? (hu - hu.transpose()).cwiseAbs().maxCoeff() : 0.0);
  }
  return report;
}

EnergyFamily EnergyFamily::checked(EnergyFamily family, std::uint64_t seed) {
  if (family.dim_u <= 0 || family.dim_mu <= 0) {
    fail(ErrorKind::kValidation, "energy family dimensions must be positive");
  }
  if (!family.value || !family.grad_u || !family.hess_u || !family.grad_mu || !family.mixed ||
      !family.hess_mu) {
    fail(ErrorKind::kValidation, "energy family is missing a callback");
  }
  if (!(family.coercivity_floor > 0.0)) {
    fail(ErrorKind::kValidation, "coercivity floor must be positive");
  }
  const DerivativeCheckReport report = check_derivatives(family, seed);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "energy family derivatives inconsistent with finite differences (grad_u "
        << report.grad_u_error << ", grad_mu " << report.grad_mu_error << ", hess_u "
        << report.hess_u_error << ", mixed " << report.mixed_error << ", hess_mu "
        << report.hess_mu_error << ", asym " << report.hess_u_asymmetry << ")";
    fail(ErrorKind::kValidation, msg.str());
  }
  return family;
}

MinimizerRecord find_minimizer(const EnergyFamily& family, const Vector& mu, const Vector& init,
                               double tol, int max_iters) {
  require_dims(family, mu);
  if (init.size() != family.dim_u) fail(ErrorKind::kValidation, "initial guess has wrong dimension");
  if (!(tol > 0.0)) fail(ErrorKind::kValidation, "tolerance must be positive");

  Vector u = init;
  Vector grad = family.grad_u(u, mu);
  std::vector<double> history{grad.norm()};
  int iters = 0;

  while (grad.norm() > tol) {
    if (iters >= max_iters) {
      throw SolverError("Newton iteration did not converge", history);
    }
    const Vector step = -factor_hessian(family, u, mu).solve(grad);
    const double slope = grad.dot(step);
    const double j0 = family.value(u, mu);

    // Armijo backtracking; a full step is accepted for quadratics. Close to the
    // minimizer the energy decrease drops below rounding, so a step that
    // reduces the gradient norm is accepted as well.
    double alpha = 1.0;
    Vector trial = u + step;
    Vector trial_grad = family.grad_u(trial, mu);
    while (family.value(trial, mu) > j0 + 1e-4 * alpha * slope && trial_grad.norm() >= grad.norm() &&
           alpha > 1e-10) {
      alpha *= 0.5;
      trial = u + alpha * step;
      trial_grad = family.grad_u(trial, mu);
    }
    u = trial;
    grad = trial_grad;
    history.push_back(grad.norm());
    ++iters;
  }

  // Coercivity at the minimizer: smallest eigenvalue of the Hessian >= alpha.
  const Matrix hess = family.hess_u(u, mu);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hess, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min < family.coercivity_floor) {
    std::ostringstream msg;
    msg << "smallest Hessian eigenvalue " << lambda_min << " below coercivity floor "
        << family.coercivity_floor;
    fail(ErrorKind::kCoercivity, msg.str());
  }

  return MinimizerRecord{mu, u, grad.norm(), iters, tol};
}

Vector envelope_derivative(const EnergyFamily& family, const Vector& mu,
                           const MinimizerRecord& record) {
  require_fresh(family, mu, record);
  return family.grad_mu(record.u_star, mu);
}

Matrix minimizer_sensitivity(const EnergyFamily& family, const Vector& mu,
                             const MinimizerRecord& record) {
  require_fresh(family, mu, record);
  const auto llt = factor_hessian(family, record.u_star, mu);
  return -llt.solve(family.mixed(record.u_star, mu));
}

SecondDerivative envelope_second_derivative(const EnergyFamily& family, const Vector& mu,
                                            const MinimizerRecord& record) {
  require_fresh(family, mu, record);
  const auto llt = factor_hessian(family, record.u_star, mu);
  const Matrix h0 = family.mixed(record.u_star, mu);
  const Matrix raw = family.hess_mu(record.u_star, mu) - h0.transpose() * llt.solve(h0);
  SecondDerivative out;
  out.asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  out.value = 0.5 * (raw + raw.transpose());
  return out;
}

HolderTable holder_probe(const EnergyFamily& family, const Vector& mu0, const Vector& direction,
                         const std::vector<double>& steps, double tol,
                         const std::optional<Vector>& init) {
  require_dims(family, mu0);
  if (direction.size() != family.dim_mu) {
    fail(ErrorKind::kValidation, "direction has wrong dimension");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0)) fail(ErrorKind::kValidation, "holder steps must be positive");
    if (i > 0 && !(steps[i] < steps[i - 1])) {
      fail(ErrorKind::kValidation, "holder steps must be strictly decreasing");
    }
  }

  const MinimizerRecord base =
      find_minimizer(family, mu0, init.value_or(Vector::Zero(family.dim_u)), tol);

  HolderTable table;
  bool any_zero = false;
  for (double t : steps) {
    const MinimizerRecord rec = find_minimizer(family, mu0 + t * direction, base.u_star, tol);
    const double d = (rec.u_star - base.u_star).norm();
    table.rows.push_back({t, d, d / std::sqrt(t)});
    any_zero = any_zero || d == 0.0;
  }

  if (!any_zero && table.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(table.rows.size());
    for (const auto& row : table.rows) {
      const double x = std::log(row.t), y = std::log(row.displacement);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    table.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

EnergyFamily make_quadratic_family(const QuadraticFamilyData& data) {
  const auto n = data.K.rows();
  const auto m = data.L.cols();
  if (data.K.cols() != n || data.f0.size() != n || data.L.rows() != n || data.P.rows() != m ||
      data.P.cols() != m || data.c.size() != m) {
    fail(ErrorKind::kValidation, "inconsistent quadratic family dimensions");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(data.K, Eigen::EigenvaluesOnly);

  EnergyFamily fam;
  fam.dim_u = static_cast<int>(n);
  fam.dim_mu = static_cast<int>(m);
  fam.coercivity_floor = 0.5 * eig.eigenvalues().minCoeff();
  if (!(fam.coercivity_floor > 0.0)) fail(ErrorKind::kCoercivity, "K is not positive definite");

  fam.value = [data](const Vector& u, const Vector& mu) {
    return 0.5 * u.dot(data.K * u) - u.dot(data.f0 + data.L * mu) + 0.5 * mu.dot(data.P * mu) +
           data.c.dot(mu);
  };
  fam.grad_u = [data](const Vector& u, const Vector& mu) -> Vector {
    return data.K * u - data.f0 - data.L * mu;
  };
  fam.hess_u = [data](const Vector&, const Vector&) -> Matrix { return data.K; };
  fam.grad_mu = [data](const Vector& u, const Vector& mu) -> Vector {
    return -data.L.transpose() * u + data.P * mu + data.c;
  };
  fam.mixed = [data](const Vector&, const Vector&) -> Matrix { return -data.L; };
  fam.hess_mu = [data](const Vector&, const Vector&) -> Matrix { return data.P; };
  return fam;
}

QuadraticFamilyData random_quadratic_data(int dim_u, int dim_mu, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_matrix = [&](int r, int c) {
    Matrix m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  auto random_vector = [&](int r) { return Vector(random_matrix(r, 1)); };

  QuadraticFamilyData d;
  const Matrix g = random_matrix(dim_u, dim_u);
  d.K = g * g.transpose() / dim_u + 0.5 * Matrix::Identity(dim_u, dim_u);
  d.f0 = random_vector(dim_u);
  d.L = random_matrix(dim_u, dim_mu);
  const Matrix p = random_matrix(dim_mu, dim_mu);
  d.P = 0.5 * (p + p.transpose());
  d.c = random_vector(dim_mu);
  return d;
}

}  // namespace shaperate::param_variation
