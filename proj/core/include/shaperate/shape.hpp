#pragma once

// Shape derivatives of the minimized energy E*(phi) = min_v E(v, Omega(phi))
// and the energy release rate of a crack.
//
// The domain form integrates
//   grad_xi W(u) . mu - (grad_zeta W(u))^T (grad mu^T) grad u + W(u) div mu
// over the reference mesh; it needs only the minimizer u, never its shape
// derivative. fd_oracle recomputes the same quantity by re-meshing,
// re-solving and differencing, as an independent route.

#include <functional>
#include <string>

#include "shaperate/deformation.hpp"
#include "shaperate/fem.hpp"
#include "shaperate/mesh.hpp"

namespace shaperate::shape {

/// How mu and grad mu^T enter the element integrals.
enum class VelocitySampling {
  /// Per-element P1 interpolant of the nodal velocities: velocity at the
  /// centroid is the mean nodal velocity and grad mu^T is the element
  /// gradient. This is the exact derivative of the discrete energy under
  /// nodal motion x_i -> x_i + t mu(x_i), i.e. of what deform_mesh does.
  kInterpolated,
  /// mu and grad mu^T evaluated analytically at the element centroid.
  kAnalytic,
};

struct ShapeDerivativeReport {
  double value = 0.0;      // E*'(phi_0)[mu]
  double term_xi = 0.0;    // int grad_xi W . mu
  double term_grad = 0.0;  // -int (grad_zeta W)^T grad mu^T grad u
  double term_div = 0.0;   // int W div mu
  double mesh_h = 0.0;
  std::string field;
};

/// Requires u to be the solved minimizer on `mesh`: the relative Galerkin
/// residual must not exceed `residual_tol`, otherwise kPrecondition.
ShapeDerivativeReport shape_derivative_domain(
    const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs, const fem::DiscreteField& u,
    const deformation::VelocityField& mu,
    VelocitySampling sampling = VelocitySampling::kInterpolated, double residual_tol = 1e-6);

/// E*(phi(t)) on deform_mesh(mesh, mu, t): reassemble, solve, evaluate.
double minimized_energy(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                        const deformation::VelocityField& mu, double t, double solver_tol = 1e-12);

/// (E*(+step) - E*(-step)) / (2 step).
double fd_oracle(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                 const deformation::VelocityField& mu, double step = 1e-4,
                 double solver_tol = 1e-12);

struct ContourSpec {
  Point center = Point::Zero();
  double radius = 0.0;
  int sample_count = 0;
};

struct AnalyticField {
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> gradient;
};

/// Anti-plane crack field sqrt(r) sin(theta/2) around `tip`.
AnalyticField mode3_field(const Point& tip, const Vec2& direction);

/// Circle integral of W(u) mu.nu - (grad_zeta W(u) . nu)(grad u . mu), nu the
/// outward normal of the enclosed disk, by the periodic trapezoid rule at
/// angles -pi + (k + 1/2) 2 pi / N. Around a crack tip with mu the extension
/// direction this equals the energy release rate.
double j_integral(const ContourSpec& contour, const AnalyticField& field,
                  const fem::CoefficientSet& coeffs, const deformation::VelocityField& mu);

/// Discrete version: values and gradients come from the containing triangle.
/// The circle must stay clear of every non-crack boundary edge (kGeometry);
/// samples outside the mesh raise kMeshQuery.
double j_integral(const ContourSpec& contour, const mesh::TriMesh& mesh,
                  const fem::DiscreteField& u, const fem::CoefficientSet& coeffs,
                  const deformation::VelocityField& mu);

/// G = -E*'[mu] for the virtual extension mu = crack_extension_field(tip,
/// direction, r_in, r_out). The disk of radius r_out must avoid every
/// non-crack boundary edge (kConfiguration).
double energy_release_rate(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                           const fem::DiscreteField& u, const Point& tip, const Vec2& direction,
                           double r_in, double r_out,
                           VelocitySampling sampling = VelocitySampling::kInterpolated);

/// -1/2 int_{Gamma_D} |grad u|^2 mu.nu - int_{rest of boundary} f u mu.nu,
/// with 3-point Gauss quadrature per edge and grad u from the owning
/// triangle. Requires B = I and b = 0.
double dirichlet_boundary_formula(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                                  const fem::DiscreteField& u,
                                  const deformation::VelocityField& mu);

struct GriffithVerdict {
  bool propagates = false;
  double margin = 0.0;  // G - G_c
};

/// Propagation iff G >= G_c.
GriffithVerdict griffith_check(double G, double G_c);

/// Domain-form derivative for a velocity field whose support box stays clear
/// of the whole boundary (crack faces included). Vanishes in the continuum.
double inner_variation_check(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                             const fem::DiscreteField& u, const deformation::VelocityField& mu,
                             VelocitySampling sampling = VelocitySampling::kInterpolated);

}  // namespace shaperate::shape
