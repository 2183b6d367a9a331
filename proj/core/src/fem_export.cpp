#include <cstdio>
#include <ostream>

#include "shaperate/fem.hpp"

namespace shaperate::fem {
namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_solution_csv(const mesh::TriMesh& mesh, const DiscreteField& u, std::ostream& out) {
  u.check_on(mesh);
  out << "node_id,x,y,u\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    out << i << ',' << real(mesh.node(i).x()) << ',' << real(mesh.node(i).y()) << ',' << real(u[i])
        << '\n';
  }
}

void write_solution_vtk(const mesh::TriMesh& mesh, const DiscreteField& u, std::ostream& out) {
  u.check_on(mesh);
  out << "# vtk DataFile Version 3.0\n";
  out << "shaperate solution\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes()) out << real(p.x()) << ' ' << real(p.y()) << " 0\n";
  out << "CELLS " << mesh.triangle_count() << ' ' << 4 * mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangle_count() << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) out << "5\n";
  out << "POINT_DATA " << mesh.node_count() << '\n';
  out << "SCALARS u double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int i = 0; i < mesh.node_count(); ++i) out << real(u[i]) << '\n';
}

}  // namespace shaperate::fem
