#include "shaperate/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "shaperate/error.hpp"

namespace shaperate {

bool segment_intersects_box(const Point& a, const Point& b, const Box& box) {
  // Liang-Barsky clipping of the parametrized segment against the box.
  if (box.empty()) return false;
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      if (a[axis] < box.lo[axis] || a[axis] > box.hi[axis]) return false;
      continue;
    }
    double ta = (box.lo[axis] - a[axis]) / d[axis];
    double tb = (box.hi[axis] - a[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

}  // namespace shaperate

namespace shaperate::deformation {

VelocityField::VelocityField(std::string descriptor, EvalFn eval, JacobianFn jacobian,
                             double lip_bound, std::optional<Box> support)
    : descriptor_(std::move(descriptor)),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      lip_bound_(lip_bound),
      support_(support) {
  if (!eval_ || !jacobian_) fail(ErrorKind::kValidation, "velocity field needs eval and jacobian");
  if (!(lip_bound_ >= 0.0) || !std::isfinite(lip_bound_)) {
    fail(ErrorKind::kValidation, "velocity field Lipschitz bound must be finite and >= 0");
  }
}

VelocityField VelocityField::operator+(const VelocityField& other) const {
  std::optional<Box> support;
  if (support_ && other.support_) {
    if (support_->empty()) {
      support = other.support_;
    } else if (other.support_->empty()) {
      support = support_;
    } else {
      support = Box{support_->lo.cwiseMin(other.support_->lo),
                    support_->hi.cwiseMax(other.support_->hi)};
    }
  }
  auto a = *this;
  auto b = other;
  return VelocityField(
      descriptor_ + "+" + other.descriptor_, [a, b](const Point& x) -> Vec2 { return a(x) + b(x); },
      [a, b](const Point& x) -> Mat2 { return a.jacobian(x) + b.jacobian(x); },
      lip_bound_ + other.lip_bound_, support);
}

VelocityField VelocityField::scaled(double factor) const {
  auto a = *this;
  std::ostringstream name;
  name << factor << "*" << descriptor_;
  return VelocityField(
      name.str(), [a, factor](const Point& x) -> Vec2 { return factor * a(x); },
      [a, factor](const Point& x) -> Mat2 { return factor * a.jacobian(x); },
      std::abs(factor) * lip_bound_, support_);
}

VelocityField zero_field() {
  return VelocityField(
      "zero", [](const Point&) -> Vec2 { return Vec2::Zero(); },
      [](const Point&) -> Mat2 { return Mat2::Zero(); }, 0.0, Box::empty_box());
}

VelocityField translate(double dx, double dy) {
  std::ostringstream name;
  name << "translate(" << dx << "," << dy << ")";
  return VelocityField(
      name.str(), [dx, dy](const Point&) -> Vec2 { return Vec2(dx, dy); },
      [](const Point&) -> Mat2 { return Mat2::Zero(); }, 0.0);
}

VelocityField stretch_x() {
  return VelocityField(
      "stretch_x", [](const Point& x) -> Vec2 { return Vec2(x.x(), 0.0); },
      [](const Point&) -> Mat2 { return (Mat2() << 1.0, 0.0, 0.0, 0.0).finished(); }, 1.0);
}

VelocityField rotate(const Point& center) {
  std::ostringstream name;
  name << "rotate(" << center.x() << "," << center.y() << ")";
  // mu_1 = -(y - cy), mu_2 = x - cx:  d mu_2/dx = 1 at (0,1), d mu_1/dy = -1 at (1,0).
  return VelocityField(
      name.str(),
      [center](const Point& x) -> Vec2 { return Vec2(-(x.y() - center.y()), x.x() - center.x()); },
      [](const Point&) -> Mat2 { return (Mat2() << 0.0, 1.0, -1.0, 0.0).finished(); }, 1.0);
}

VelocityField crack_extension_field(const Point& tip, const Vec2& direction, double r_in,
                                    double r_out) {
  if (!(r_in > 0.0) || !(r_in < r_out)) {
    fail(ErrorKind::kValidation, "crack extension field needs 0 < r_in < r_out");
  }
  const double dn = direction.norm();
  if (!(std::abs(dn - 1.0) < 1e-12)) {
    fail(ErrorKind::kValidation, "crack extension direction must be a unit vector");
  }
  const double width = r_out - r_in;

  // rho(s) = 1 - 3 s^2 + 2 s^3 on s = (r - r_in) / width in [0, 1].
  auto eval = [=](const Point& x) -> Vec2 {
    const double r = (x - tip).norm();
    if (r <= r_in) return direction;
    if (r >= r_out) return Vec2::Zero();
    const double s = (r - r_in) / width;
    return direction * (1.0 - 3.0 * s * s + 2.0 * s * s * s);
  };
  auto jac = [=](const Point& x) -> Mat2 {
    const Vec2 rel = x - tip;
    const double r = rel.norm();
    if (r <= r_in || r >= r_out) return Mat2::Zero();
    const double s = (r - r_in) / width;
    const double drho = (-6.0 * s + 6.0 * s * s) / width;
    const Vec2 grad_rho = drho * rel / r;
    return grad_rho * direction.transpose();  // (i, j) = d_i rho * dir_j
  };
  std::ostringstream name;
  name << "crack_extension(" << tip.x() << "," << tip.y() << "," << direction.x() << ","
       << direction.y() << "," << r_in << "," << r_out << ")";
  return VelocityField(name.str(), eval, jac, 1.5 / width,
                       Box{tip - Point(r_out, r_out), tip + Point(r_out, r_out)});
}

VelocityField bump(const Box& support, const Vec2& direction) {
  const double wx = support.hi.x() - support.lo.x();
  const double wy = support.hi.y() - support.lo.y();
  if (!(wx > 0.0) || !(wy > 0.0)) fail(ErrorKind::kValidation, "bump support must have positive size");

  struct Profile {
    double a, w;
    double value(double s) const {
      const double q = (s - a) / w;
      if (q <= 0.0 || q >= 1.0) return 0.0;
      const double p = q * (1.0 - q);
      return 16.0 * p * p;
    }
    double slope(double s) const {
      const double q = (s - a) / w;
      if (q <= 0.0 || q >= 1.0) return 0.0;
      return 32.0 * q * (1.0 - q) * (1.0 - 2.0 * q) / w;
    }
  };
  const Profile px{support.lo.x(), wx}, py{support.lo.y(), wy};

  auto eval = [=](const Point& x) -> Vec2 { return direction * px.value(x.x()) * py.value(x.y()); };
  auto jac = [=](const Point& x) -> Mat2 {
    const Vec2 grad(px.slope(x.x()) * py.value(x.y()), px.value(x.x()) * py.slope(x.y()));
    return grad * direction.transpose();
  };
  // max |q'| = 32 * max q(1-q)(1-2q) / w = (16 / (3 sqrt 3)) / w.
  const double slope_max = 16.0 / (3.0 * std::sqrt(3.0));
  const double lip = direction.norm() * std::hypot(slope_max / wx, slope_max / wy);
  std::ostringstream name;
  name << "bump(" << support.lo.x() << "," << support.hi.x() << "," << support.lo.y() << ","
       << support.hi.y() << "," << direction.x() << "," << direction.y() << ")";
  return VelocityField(name.str(), eval, jac, lip, support);
}

bool VelocityCheckReport::ok(double tol) const {
  return jacobian_error <= tol && divergence_error <= tol;
}

VelocityCheckReport verify_velocity_field(const VelocityField& mu, const Box& box, int samples,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.lo.x(), box.hi.x());
  std::uniform_real_distribution<double> uy(box.lo.y(), box.hi.y());
  const double h = 1e-6;
  VelocityCheckReport report;
  for (int s = 0; s < samples; ++s) {
    const Point x(ux(rng), uy(rng));
    const Mat2 jac = mu.jacobian(x);
    Mat2 fd;
    for (int i = 0; i < 2; ++i) {
      Point xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd.row(i) = ((mu(xp) - mu(xm)) / (2 * h)).transpose();
    }
    const double scale = 1.0 + jac.cwiseAbs().maxCoeff();
    report.jacobian_error = std::max(report.jacobian_error, (jac - fd).cwiseAbs().maxCoeff() / scale);
    report.divergence_error = std::max(report.divergence_error, std::abs(jac.trace() - fd.trace()));
    Eigen::JacobiSVD<Mat2> svd(jac);
    report.sampled_lip = std::max(report.sampled_lip, svd.singularValues()(0));
  }
  return report;
}

Deformation::Deformation(VelocityField mu, double t) : mu_(std::move(mu)), t_(t) {
  if (!(bilipschitz_margin(mu_, t_) > 0.0)) {
    std::ostringstream msg;
    msg << "deformation too large: |t| * lip = " << std::abs(t_) * mu_.lip_bound() << " >= 1";
    fail(ErrorKind::kDeformationTooLarge, msg.str());
  }
}

double bilipschitz_margin(const VelocityField& mu, double t) {
  return 1.0 - std::abs(t) * mu.lip_bound();
}

double kappa_lower_bound(const VelocityField& mu, double t) {
  const double m = bilipschitz_margin(mu, t);
  return m * m;
}

double kappa(const Deformation& d, const Point& x) { return d.jacobian(x).determinant(); }

Mat2 a_matrix(const Deformation& d, const Point& x) {
  const Mat2 j = d.jacobian(x);
  const double det = j.determinant();
  if (!(det > 1e-14)) fail(ErrorKind::kInternal, "deformation Jacobian is singular");
  Mat2 inv;
  inv << j(1, 1), -j(0, 1), -j(1, 0), j(0, 0);
  return inv / det;
}

double kappa_derivative(const VelocityField& mu, const Point& x) { return mu.divergence(x); }

Mat2 a_derivative(const VelocityField& mu, const Point& x) { return -mu.jacobian(x); }

}  // namespace shaperate::deformation
