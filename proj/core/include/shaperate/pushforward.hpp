#pragma once

#include <vector>

#include "shaperate/deformation.hpp"
#include "shaperate/fem.hpp"
#include "shaperate/mesh.hpp"

namespace shaperate::deformation {

struct PushforwardRow {
  double t = 0.0;
  double l2 = 0.0;        // || phi(t)_* f - f ||_{L^2}
  double h1_semi = 0.0;   // || grad (phi(t)_* f - f) ||_{L^2}
  double h1 = 0.0;        // sqrt(l2^2 + h1_semi^2)
};

/// Discrete pushforward phi(t)_* f = f o phi(t)^{-1}: the nodal values of f
/// are carried unchanged onto deform_mesh(mesh, mu, t). The difference to f is
/// integrated with a 3-point rule over the reference triangles, restricted to
/// points that also lie in the deformed domain.
std::vector<PushforwardRow> pushforward_continuity_probe(const mesh::TriMesh& mesh,
                                                         const VelocityField& mu,
                                                         const fem::DiscreteField& field,
                                                         const std::vector<double>& steps);

}  // namespace shaperate::deformation
