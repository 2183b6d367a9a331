#pragma once

// P1 finite elements for the quadratic energy
//
//   E(v) = int 1/2 (grad v^T B grad v + b v^2) - f v  dx,  v = g on Gamma_D.
//
// Every coefficient integral uses one-point centroid quadrature, and the
// assembled system is exactly the Hessian/gradient of energy(), so the
// discrete minimizer and the reported energy belong to the same functional.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shaperate/geometry.hpp"
#include "shaperate/mesh.hpp"

namespace shaperate::deformation {
class Deformation;
}

namespace shaperate::fem {

/// Coefficients of W(xi, eta, zeta) = 1/2 (zeta^T B zeta + b eta^2) - f eta.
struct CoefficientSet {
  std::string name;
  std::function<Mat2(const Point&)> B;
  std::function<std::array<Mat2, 2>(const Point&)> grad_B;  // dB/dx, dB/dy
  std::function<double(const Point&)> b;
  std::function<Vec2(const Point&)> grad_b;
  std::function<double(const Point&)> f;
  std::function<Vec2(const Point&)> grad_f;
  std::function<double(const Point&)> g;  // Dirichlet datum
  double beta0 = 1.0;

  double W(const Point& xi, double eta, const Vec2& zeta) const;
  Vec2 grad_xi_W(const Point& xi, double eta, const Vec2& zeta) const;
  double W_eta(const Point& xi, double eta) const;
  Vec2 grad_zeta_W(const Point& xi, const Vec2& zeta) const;
};

/// B = I, b = 0, f = 2 pi^2 sin(pi x) sin(pi y), g = 0; exact u = sin(pi x) sin(pi y) on the unit square.
CoefficientSet poisson_manufactured();
/// Spatially constant coefficients with g = 0.
CoefficientSet constant(double B11, double B12, double B22, double b, double f);
/// Anti-plane crack: B = I, b = f = 0 and g = sqrt(r) sin(theta / 2), with
/// theta measured from `direction` around `tip` so the slit sits at theta = +-pi.
CoefficientSet mode3_crack(const Point& tip, const Vec2& direction);

/// sqrt(r) sin(theta / 2) and its gradient.
double mode3_value(const Point& x, const Point& tip, const Vec2& direction);
Vec2 mode3_gradient(const Point& x, const Point& tip, const Vec2& direction);

struct CoefficientCheckReport {
  double min_ellipticity = 0.0;  // min zeta^T B zeta / |zeta|^2 over samples
  double min_b = 0.0;
  double gradient_error = 0.0;   // max FD mismatch over grad_B, grad_b, grad_f
  bool ok(double beta0, double tol = 1e-6) const;
};

CoefficientCheckReport verify_coefficients(const CoefficientSet& coeffs, const Box& box,
                                           int samples, std::uint64_t seed);

/// Nodal values of a P1 field. Crack-duplicated nodes carry independent values.
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(const mesh::TriMesh& mesh, Eigen::VectorXd values);

  static DiscreteField zeros(const mesh::TriMesh& mesh);
  static DiscreteField interpolate(const mesh::TriMesh& mesh,
                                   const std::function<double(const Point&)>& fn);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }

  /// Throws kValidation unless the field has one value per mesh node.
  void check_on(const mesh::TriMesh& mesh) const;

 private:
  Eigen::VectorXd values_;
};

/// Area, centroid and barycentric gradients of one triangle.
struct ElementGeometry {
  double area = 0.0;
  Point centroid = Point::Zero();
  std::array<Vec2, 3> grad_lambda{};

  Vec2 gradient(const std::array<double, 3>& nodal) const {
    return nodal[0] * grad_lambda[0] + nodal[1] * grad_lambda[1] + nodal[2] * grad_lambda[2];
  }
};

ElementGeometry element_geometry(const mesh::TriMesh& mesh, int t);
std::array<double, 3> element_values(const mesh::TriMesh& mesh, const DiscreteField& v, int t);

struct LinearSystem {
  Eigen::SparseMatrix<double> matrix;  // full symmetric matrix before elimination
  Eigen::VectorXd rhs;
  std::map<int, double> dirichlet;     // node -> prescribed value
};

/// Element-wise P1 stiffness (B at centroid), mass (b at centroid, one-point
/// rule: b |T| / 9 on every entry) and load (f |T| / 3 per node).
LinearSystem assemble(const mesh::TriMesh& mesh, const CoefficientSet& coeffs);

/// Prescribed values for the Dirichlet nodes of a mesh.
std::map<int, double> dirichlet_values(const mesh::TriMesh& mesh, const CoefficientSet& coeffs);

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
};

/// Jacobi-preconditioned CG on the Dirichlet-eliminated system. Dirichlet
/// nodes receive their prescribed values exactly.
DiscreteField solve(const LinearSystem& system, double tol = 1e-10, SolveStats* stats = nullptr,
                    int max_iters = 0);

/// Convenience: assemble + solve.
DiscreteField solve_problem(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                            double tol = 1e-10);

double energy(const mesh::TriMesh& mesh, const CoefficientSet& coeffs, const DiscreteField& v);

/// int W(phi(x), v, A grad v) kappa dx with A, kappa and phi taken at the
/// reference centroids.
double pulled_back_energy(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                          const DiscreteField& v, const deformation::Deformation& d);

/// int W_eta(u) v + grad_zeta W(u) . grad v dx. `v` must vanish on Dirichlet nodes.
double weak_residual(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                     const DiscreteField& u, const DiscreteField& v);

/// max_i |r_i| / max_i (sum of |contributions to r_i|) over free nodes, with
/// r_i = weak_residual(u, phi_i). Small values certify a solved minimizer.
double relative_galerkin_residual(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                                  const DiscreteField& u);

/// CSV with header `node_id,x,y,u`.
void write_solution_csv(const mesh::TriMesh& mesh, const DiscreteField& u, std::ostream& out);
/// Legacy VTK ASCII unstructured grid with point scalar `u`.
void write_solution_vtk(const mesh::TriMesh& mesh, const DiscreteField& u, std::ostream& out);

}  // namespace shaperate::fem
