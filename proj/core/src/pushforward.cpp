#include "shaperate/pushforward.hpp"

#include <cmath>

namespace shaperate::deformation {

std::vector<PushforwardRow> pushforward_continuity_probe(const mesh::TriMesh& mesh,
                                                         const VelocityField& mu,
                                                         const fem::DiscreteField& field,
                                                         const std::vector<double>& steps) {
  field.check_on(mesh);
  static constexpr std::array<std::array<double, 3>, 3> kRule{
      {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}}};

  std::vector<PushforwardRow> rows;
  rows.reserve(steps.size());
  for (double t : steps) {
    PushforwardRow row{t, 0.0, 0.0, 0.0};
    if (t != 0.0) {
      const mesh::TriMesh moved = mesh::deform_mesh(mesh, mu, t);
      const mesh::PointLocator locator(moved);
      double l2 = 0.0, semi = 0.0;
      for (int k = 0; k < mesh.triangle_count(); ++k) {
        const auto geo = fem::element_geometry(mesh, k);
        const auto nodal = fem::element_values(mesh, field, k);
        const Vec2 grad = geo.gradient(nodal);
        const auto& tri = mesh.triangle(k);
        for (const auto& w : kRule) {
          const Point y = w[0] * mesh.node(tri[0]) + w[1] * mesh.node(tri[1]) + w[2] * mesh.node(tri[2]);
          const double value = w[0] * nodal[0] + w[1] * nodal[1] + w[2] * nodal[2];
          const auto hit = locator.locate(y);
          if (!hit) continue;
          const auto moved_nodal = fem::element_values(moved, field, hit->triangle);
          const double moved_value = hit->barycentric[0] * moved_nodal[0] +
                                     hit->barycentric[1] * moved_nodal[1] +
                                     hit->barycentric[2] * moved_nodal[2];
          const Vec2 moved_grad = fem::element_geometry(moved, hit->triangle).gradient(moved_nodal);
          const double weight = geo.area / 3.0;
          l2 += weight * (moved_value - value) * (moved_value - value);
          semi += weight * (moved_grad - grad).squaredNorm();
        }
      }
      row.l2 = std::sqrt(l2);
      row.h1_semi = std::sqrt(semi);
      row.h1 = std::sqrt(l2 + semi);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace shaperate::deformation
