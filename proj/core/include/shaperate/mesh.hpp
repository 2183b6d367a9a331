#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shaperate/geometry.hpp"

namespace shaperate::deformation {
class VelocityField;
}

namespace shaperate::mesh {

enum class BoundaryTag { kDirichlet, kNeumann, kCrackPlus, kCrackMinus };

std::string_view to_string(BoundaryTag tag);
std::optional<BoundaryTag> parse_tag(std::string_view text);
inline bool is_crack(BoundaryTag tag) {
  return tag == BoundaryTag::kCrackPlus || tag == BoundaryTag::kCrackMinus;
}

/// Boundary edge oriented so that its owning triangle lies on the left;
/// the outward normal of edge (a, b) is therefore (b - a) rotated clockwise.
struct BoundaryEdge {
  std::array<int, 2> nodes{};
  BoundaryTag tag = BoundaryTag::kNeumann;

  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

using Triangle = std::array<int, 3>;

/// Counterclockwise P1 triangulation with tagged boundary and optional crack slit.
///
/// A slit is represented by duplicated nodes along an edge-aligned segment:
/// the crack_plus and crack_minus chains are geometrically coincident but use
/// distinct node indices, except at the shared tip node.
class TriMesh {
 public:
  TriMesh() = default;
  /// Index ranges are checked here; full consistency is checked by validate().
  /// When `domain` is omitted the reference box is derived from the nodes.
  TriMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
          std::vector<BoundaryEdge> boundary_edges, std::optional<int> crack_tip = std::nullopt,
          std::optional<Box> domain = std::nullopt);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  const std::optional<int>& crack_tip() const { return crack_tip_; }
  /// Reference box Omega_0; all nodes lie strictly inside it.
  const Box& domain_box() const { return domain_; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }

  double area(int t) const;
  Point centroid(int t) const;
  double total_area() const;
  /// Longest edge over all triangles.
  double max_edge_length() const;
  /// Bounding box of the node coordinates.
  Box node_bounds() const;

  /// Nodes touched by Dirichlet-tagged edges, ascending.
  std::vector<int> dirichlet_nodes() const;
  bool has_crack() const;

  /// Reference box convention: node bounds expanded by half the larger extent.
  static Box default_domain(const std::vector<Point>& nodes);

  /// Equality of nodes (bitwise), triangles, edges and tip.
  friend bool operator==(const TriMesh& a, const TriMesh& b);

 private:
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::optional<int> crack_tip_;
  Box domain_;
};

enum Side : unsigned { kLeft = 1u, kRight = 2u, kBottom = 4u, kTop = 8u };
using SideSet = unsigned;
inline constexpr SideSet kAllSides = kLeft | kRight | kBottom | kTop;

/// Structured triangulation of [x0, x1] x [y0, y1] with (nx+1)(ny+1) nodes and
/// 2 nx ny triangles; cell diagonals alternate in a union-jack pattern.
/// Sides in `dirichlet` are tagged Dirichlet, the rest Neumann. An empty
/// Dirichlet set is rejected unless `allow_all_neumann`.
TriMesh gen_rect_mesh(std::pair<double, double> x_range, std::pair<double, double> y_range, int nx,
                      int ny, SideSet dirichlet, bool allow_all_neumann = false);

/// Cuts an edge-aligned straight slit from `mouth` (on the outer boundary) to
/// `tip` (interior). Every slit node except the tip is duplicated; the
/// original index keeps the triangles left of mouth->tip (crack_plus).
TriMesh insert_crack_slit(const TriMesh& mesh, const Point& mouth, const Point& tip);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> problems;
  double min_area = 0.0;
  int boundary_edge_count = 0;
  int crack_edge_count = 0;
};

ValidationReport validate(const TriMesh& mesh);

/// Moves nodes by x -> x + t mu(x). Requires a positive bi-Lipschitz margin;
/// the result keeps connectivity, tags and the reference box.
TriMesh deform_mesh(const TriMesh& mesh, const deformation::VelocityField& mu, double t);

void write_mesh(const TriMesh& mesh, std::ostream& out);
void write_mesh(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh read_mesh(std::istream& in);
TriMesh read_mesh(const std::filesystem::path& path);

/// Bucketed point location in a fixed mesh.
class PointLocator {
 public:
  struct Hit {
    int triangle = -1;
    std::array<double, 3> barycentric{};
  };

  explicit PointLocator(const TriMesh& mesh);

  /// Triangle containing p (within a relative tolerance); empty when outside.
  std::optional<Hit> locate(const Point& p) const;

 private:
  const TriMesh* mesh_;
  Box bounds_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;

  int bucket_x(double x) const;
  int bucket_y(double y) const;
};

}  // namespace shaperate::mesh
