#include "shaperate/shape.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "shaperate/error.hpp"

namespace shaperate::shape {
namespace {

using std::numbers::pi;

struct ElementVelocity {
  Vec2 value;
  Mat2 grad_T;  // (i, j) = d mu_j / d x_i
};

// Map each oriented boundary edge (a, b) to the triangle that traverses a -> b.
std::map<std::pair<int, int>, int> owning_triangles(const mesh::TriMesh& mesh) {
  std::map<std::pair<int, int>, int> owner;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      owner[{tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>((k + 1) % 3)]}] = t;
    }
  }
  return owner;
}

bool is_outer(const mesh::BoundaryEdge& e) { return !mesh::is_crack(e.tag); }

double distance_to_outer_boundary(const mesh::TriMesh& mesh, const Point& p) {
  double d = 1e300;
  for (const auto& e : mesh.boundary_edges()) {
    if (!is_outer(e)) continue;
    d = std::min(d, point_segment_distance(p, mesh.node(e.nodes[0]), mesh.node(e.nodes[1])));
  }
  return d;
}

double contour_integrand(const fem::CoefficientSet& coeffs, const Point& x, const Vec2& normal,
                         double value, const Vec2& grad, const Vec2& velocity) {
  return coeffs.W(x, value, grad) * velocity.dot(normal) -
         coeffs.grad_zeta_W(x, grad).dot(normal) * grad.dot(velocity);
}

void check_contour(const ContourSpec& contour) {
  if (!(contour.radius > 0.0)) fail(ErrorKind::kValidation, "contour radius must be positive");
  if (contour.sample_count < 1) fail(ErrorKind::kValidation, "contour needs at least one sample");
}

template <class Sampler>
double circle_quadrature(const ContourSpec& contour, Sampler&& sample) {
  const int n = contour.sample_count;
  const double dtheta = 2 * pi / n;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double theta = -pi + (k + 0.5) * dtheta;
    const Vec2 normal(std::cos(theta), std::sin(theta));
    sum += sample(contour.center + contour.radius * normal, normal);
  }
  return sum * contour.radius * dtheta;
}

}  // namespace

ShapeDerivativeReport shape_derivative_domain(const mesh::TriMesh& mesh,
                                              const fem::CoefficientSet& coeffs,
                                              const fem::DiscreteField& u,
                                              const deformation::VelocityField& mu,
                                              VelocitySampling sampling, double residual_tol) {
  u.check_on(mesh);
  const double residual = fem::relative_galerkin_residual(mesh, coeffs, u);
  if (!(residual <= residual_tol)) {
    std::ostringstream msg;
    msg << "field is not a solved minimizer (relative Galerkin residual " << residual << ")";
    fail(ErrorKind::kPrecondition, msg.str());
  }

  std::vector<Vec2> nodal_mu;
  if (sampling == VelocitySampling::kInterpolated) {
    nodal_mu.reserve(mesh.nodes().size());
    for (const auto& x : mesh.nodes()) nodal_mu.push_back(mu(x));
  }

  ShapeDerivativeReport report;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = fem::element_geometry(mesh, t);
    const auto nodal = fem::element_values(mesh, u, t);
    const double u_c = (nodal[0] + nodal[1] + nodal[2]) / 3.0;
    const Vec2 grad = geo.gradient(nodal);

    ElementVelocity vel;
    if (sampling == VelocitySampling::kInterpolated) {
      const auto& tri = mesh.triangle(t);
      vel.value = Vec2::Zero();
      vel.grad_T = Mat2::Zero();
      for (std::size_t i = 0; i < 3; ++i) {
        const Vec2& m = nodal_mu[static_cast<std::size_t>(tri[i])];
        vel.value += m / 3.0;
        vel.grad_T += geo.grad_lambda[i] * m.transpose();
      }
    } else {
      vel.value = mu(geo.centroid);
      vel.grad_T = mu.jacobian(geo.centroid);
    }

    report.term_xi += coeffs.grad_xi_W(geo.centroid, u_c, grad).dot(vel.value) * geo.area;
    report.term_grad -= coeffs.grad_zeta_W(geo.centroid, grad).dot(vel.grad_T * grad) * geo.area;
    report.term_div += coeffs.W(geo.centroid, u_c, grad) * vel.grad_T.trace() * geo.area;
  }
  report.value = report.term_xi + report.term_grad + report.term_div;
  report.mesh_h = mesh.max_edge_length();
  report.field = mu.descriptor();
  return report;
}

double minimized_energy(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                        const deformation::VelocityField& mu, double t, double solver_tol) {
  const mesh::TriMesh moved = mesh::deform_mesh(mesh, mu, t);
  const fem::DiscreteField u = fem::solve(fem::assemble(moved, coeffs), solver_tol);
  return fem::energy(moved, coeffs, u);
}

double fd_oracle(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                 const deformation::VelocityField& mu, double step, double solver_tol) {
  if (!(step > 0.0)) fail(ErrorKind::kValidation, "finite-difference step must be positive");
  const double plus = minimized_energy(mesh, coeffs, mu, step, solver_tol);
  const double minus = minimized_energy(mesh, coeffs, mu, -step, solver_tol);
  return (plus - minus) / (2.0 * step);
}

AnalyticField mode3_field(const Point& tip, const Vec2& direction) {
  return {[tip, direction](const Point& x) { return fem::mode3_value(x, tip, direction); },
          [tip, direction](const Point& x) { return fem::mode3_gradient(x, tip, direction); }};
}

double j_integral(const ContourSpec& contour, const AnalyticField& field,
                  const fem::CoefficientSet& coeffs, const deformation::VelocityField& mu) {
  check_contour(contour);
  return circle_quadrature(contour, [&](const Point& x, const Vec2& normal) {
    return contour_integrand(coeffs, x, normal, field.value(x), field.gradient(x), mu(x));
  });
}

double j_integral(const ContourSpec& contour, const mesh::TriMesh& mesh,
                  const fem::DiscreteField& u, const fem::CoefficientSet& coeffs,
                  const deformation::VelocityField& mu) {
  check_contour(contour);
  u.check_on(mesh);
  if (!(distance_to_outer_boundary(mesh, contour.center) > contour.radius)) {
    fail(ErrorKind::kGeometry, "contour touches the outer boundary");
  }
  const mesh::PointLocator locator(mesh);
  return circle_quadrature(contour, [&](const Point& x, const Vec2& normal) {
    const auto hit = locator.locate(x);
    if (!hit) fail(ErrorKind::kMeshQuery, "contour sample lies outside the mesh");
    const auto nodal = fem::element_values(mesh, u, hit->triangle);
    const double value = hit->barycentric[0] * nodal[0] + hit->barycentric[1] * nodal[1] +
                         hit->barycentric[2] * nodal[2];
    const Vec2 grad = fem::element_geometry(mesh, hit->triangle).gradient(nodal);
    return contour_integrand(coeffs, x, normal, value, grad, mu(x));
  });
}

double energy_release_rate(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                           const fem::DiscreteField& u, const Point& tip, const Vec2& direction,
                           double r_in, double r_out, VelocitySampling sampling) {
  if (!mesh.crack_tip()) fail(ErrorKind::kConfiguration, "mesh has no crack tip");
  const double scale = std::max(1.0, mesh.max_edge_length());
  if (!((mesh.node(*mesh.crack_tip()) - tip).norm() <= 1e-9 * scale)) {
    fail(ErrorKind::kConfiguration, "requested tip does not match the mesh crack tip");
  }
  const auto mu = deformation::crack_extension_field(tip, direction, r_in, r_out);
  if (!(distance_to_outer_boundary(mesh, tip) > r_out)) {
    fail(ErrorKind::kConfiguration,
         "crack extension ring reaches the Dirichlet or outer boundary");
  }
  return -shape_derivative_domain(mesh, coeffs, u, mu, sampling).value;
}

double dirichlet_boundary_formula(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                                  const fem::DiscreteField& u,
                                  const deformation::VelocityField& mu) {
  u.check_on(mesh);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Point c = mesh.centroid(t);
    if ((coeffs.B(c) - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-12 || coeffs.b(c) != 0.0) {
      fail(ErrorKind::kPrecondition, "boundary formula requires B = I and b = 0");
    }
  }

  static constexpr std::array<double, 3> kNodes{0.5 - 0.3872983346207417, 0.5,
                                                0.5 + 0.3872983346207417};
  static constexpr std::array<double, 3> kWeights{5.0 / 18, 8.0 / 18, 5.0 / 18};

  const auto owner = owning_triangles(mesh);
  double sum = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    const Point& a = mesh.node(e.nodes[0]);
    const Point& b = mesh.node(e.nodes[1]);
    const Vec2 d = b - a;
    const double len = d.norm();
    const Vec2 normal = Vec2(d.y(), -d.x()) / len;
    const auto it = owner.find({e.nodes[0], e.nodes[1]});
    if (it == owner.end()) fail(ErrorKind::kTopology, "boundary edge without owning triangle");
    const Vec2 grad = fem::element_geometry(mesh, it->second)
                          .gradient(fem::element_values(mesh, u, it->second));
    const double ua = u[e.nodes[0]], ub = u[e.nodes[1]];
    for (std::size_t q = 0; q < 3; ++q) {
      const Point x = a + kNodes[q] * d;
      const double mu_n = mu(x).dot(normal);
      const double term = e.tag == mesh::BoundaryTag::kDirichlet
                              ? -0.5 * grad.squaredNorm() * mu_n
                              : -coeffs.f(x) * ((1 - kNodes[q]) * ua + kNodes[q] * ub) * mu_n;
      sum += kWeights[q] * term * len;
    }
  }
  return sum;
}

GriffithVerdict griffith_check(double G, double G_c) {
  if (!(G_c > 0.0)) fail(ErrorKind::kValidation, "critical energy release rate must be positive");
  return {G >= G_c, G - G_c};
}

double inner_variation_check(const mesh::TriMesh& mesh, const fem::CoefficientSet& coeffs,
                             const fem::DiscreteField& u, const deformation::VelocityField& mu,
                             VelocitySampling sampling) {
  if (!mu.support()) fail(ErrorKind::kPrecondition, "velocity field declares no support box");
  for (const auto& e : mesh.boundary_edges()) {
    if (segment_intersects_box(mesh.node(e.nodes[0]), mesh.node(e.nodes[1]), *mu.support())) {
      fail(ErrorKind::kPrecondition, "velocity support touches the boundary");
    }
  }
  return shape_derivative_domain(mesh, coeffs, u, mu, sampling).value;
}

}  // namespace shaperate::shape
