#pragma once

// Lipschitz deformations phi = id + t * mu of a reference domain.
//
// Jacobians follow the transposed convention: entry (i, j) of grad_mu_T is
// d mu_j / d x_i, so grad phi^T = I + t * grad_mu_T, kappa = det(grad phi^T)
// and A = (grad phi^T)^{-1}. Gradients transform as grad_y w = A grad_x v.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "shaperate/geometry.hpp"

namespace shaperate::deformation {

/// Velocity field mu with an analytic Jacobian and a declared Lipschitz bound.
///
/// `lip_bound` must dominate the spectral norm of the Jacobian over the
/// reference box; it is checked by sampling (verify_velocity_field), not
/// computed. Callbacks must be pure and reentrant.
class VelocityField {
 public:
  using EvalFn = std::function<Vec2(const Point&)>;
  using JacobianFn = std::function<Mat2(const Point&)>;

  VelocityField(std::string descriptor, EvalFn eval, JacobianFn jacobian, double lip_bound,
                std::optional<Box> support = std::nullopt);

  Vec2 operator()(const Point& x) const { return eval_(x); }
  Vec2 eval(const Point& x) const { return eval_(x); }
  /// grad mu^T at x: (i, j) = d mu_j / d x_i.
  Mat2 jacobian(const Point& x) const { return jacobian_(x); }
  double divergence(const Point& x) const { return jacobian_(x).trace(); }

  double lip_bound() const { return lip_bound_; }
  /// Box outside which mu vanishes identically, when known.
  const std::optional<Box>& support() const { return support_; }
  const std::string& descriptor() const { return descriptor_; }

  VelocityField operator+(const VelocityField& other) const;
  VelocityField scaled(double factor) const;

 private:
  std::string descriptor_;
  EvalFn eval_;
  JacobianFn jacobian_;
  double lip_bound_;
  std::optional<Box> support_;
};

VelocityField zero_field();
VelocityField translate(double dx, double dy);
/// mu = (x, 0).
VelocityField stretch_x();
/// Rigid rotation generator mu = (-(y - cy), x - cx).
VelocityField rotate(const Point& center = Point::Zero());
/// Virtual crack extension: mu = direction * rho(|x - tip|), rho = 1 on
/// [0, r_in], a cubic Hermite ramp down to 0 on [r_in, r_out], 0 beyond.
VelocityField crack_extension_field(const Point& tip, const Vec2& direction, double r_in,
                                    double r_out);
/// Smooth bump direction * q(x) q(y) supported in the box; q is a squared
/// quadratic normalized to peak 1, so the field is C^1.
VelocityField bump(const Box& support, const Vec2& direction);

struct VelocityCheckReport {
  double jacobian_error = 0.0;    // max |J - FD(J)| / (1 + |J|)
  double divergence_error = 0.0;  // max |trace J - FD div|
  double sampled_lip = 0.0;       // max spectral norm seen
  bool ok(double tol = 1e-6) const;
  bool lip_ok(double declared) const { return sampled_lip <= declared * (1.0 + 1e-12); }
};

VelocityCheckReport verify_velocity_field(const VelocityField& mu, const Box& box, int samples,
                                          std::uint64_t seed);

/// phi = id + t * mu. Construction enforces |t| * lip_bound < 1.
class Deformation {
 public:
  Deformation(VelocityField mu, double t);

  const VelocityField& velocity() const { return mu_; }
  double magnitude() const { return t_; }
  Point map(const Point& x) const { return x + t_ * mu_(x); }
  /// grad phi^T at x.
  Mat2 jacobian(const Point& x) const { return Mat2::Identity() + t_ * mu_.jacobian(x); }

 private:
  VelocityField mu_;
  double t_;
};

/// 1 - |t| * lip_bound; the deformation is admissible iff this is positive.
double bilipschitz_margin(const VelocityField& mu, double t);

/// Lower bound (1 - |t| lip)^2 on kappa over the reference domain.
double kappa_lower_bound(const VelocityField& mu, double t);

double kappa(const Deformation& d, const Point& x);
Mat2 a_matrix(const Deformation& d, const Point& x);

/// First variations at the identity: kappa'[mu] = div mu, A'[mu] = -grad mu^T.
double kappa_derivative(const VelocityField& mu, const Point& x);
Mat2 a_derivative(const VelocityField& mu, const Point& x);

}  // namespace shaperate::deformation
