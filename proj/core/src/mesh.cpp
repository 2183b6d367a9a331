#include "shaperate/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "shaperate/deformation.hpp"
#include "shaperate/error.hpp"

namespace shaperate::mesh {
namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

struct EdgeUse {
  int triangle;
  int from;  // oriented as in the triangle's CCW ordering
  int to;
};

std::map<EdgeKey, std::vector<EdgeUse>> edge_uses(const TriMesh& mesh) {
  std::map<EdgeKey, std::vector<EdgeUse>> uses;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<std::size_t>(k)];
      const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
      uses[key(a, b)].push_back({t, a, b});
    }
  }
  return uses;
}

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kDirichlet: return "dirichlet";
    case BoundaryTag::kNeumann: return "neumann";
    case BoundaryTag::kCrackPlus: return "crack_plus";
    case BoundaryTag::kCrackMinus: return "crack_minus";
  }
  return "neumann";
}

std::optional<BoundaryTag> parse_tag(std::string_view text) {
  if (text == "dirichlet") return BoundaryTag::kDirichlet;
  if (text == "neumann") return BoundaryTag::kNeumann;
  if (text == "crack_plus") return BoundaryTag::kCrackPlus;
  if (text == "crack_minus") return BoundaryTag::kCrackMinus;
  return std::nullopt;
}

TriMesh::TriMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
                 std::vector<BoundaryEdge> boundary_edges, std::optional<int> crack_tip,
                 std::optional<Box> domain)
    : nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)),
      crack_tip_(crack_tip) {
  const int n = node_count();
  auto in_range = [n](int i) { return i >= 0 && i < n; };
  for (const auto& tri : triangles_) {
    for (int i : tri) {
      if (!in_range(i)) fail(ErrorKind::kTopology, "triangle references a missing node");
    }
  }
  for (const auto& e : boundary_edges_) {
    if (!in_range(e.nodes[0]) || !in_range(e.nodes[1])) {
      fail(ErrorKind::kTopology, "boundary edge references a missing node");
    }
  }
  if (crack_tip_ && !in_range(*crack_tip_)) fail(ErrorKind::kTopology, "crack tip is not a node");
  domain_ = domain ? *domain : default_domain(nodes_);
}

Box TriMesh::default_domain(const std::vector<Point>& nodes) {
  if (nodes.empty()) return Box{};
  Box b{nodes.front(), nodes.front()};
  for (const auto& p : nodes) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  const double extent = std::max(b.hi.x() - b.lo.x(), b.hi.y() - b.lo.y());
  return b.expanded(0.5 * std::max(extent, 1e-300));
}

double TriMesh::area(int t) const {
  const auto& tri = triangle(t);
  return signed_area(node(tri[0]), node(tri[1]), node(tri[2]));
}

Point TriMesh::centroid(int t) const {
  const auto& tri = triangle(t);
  return (node(tri[0]) + node(tri[1]) + node(tri[2])) / 3.0;
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (int t = 0; t < triangle_count(); ++t) sum += area(t);
  return sum;
}

double TriMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      h = std::max(h, (node(tri[static_cast<std::size_t>(k)]) -
                       node(tri[static_cast<std::size_t>((k + 1) % 3)]))
                          .norm());
    }
  }
  return h;
}

Box TriMesh::node_bounds() const {
  if (nodes_.empty()) return Box{};
  Box b{nodes_.front(), nodes_.front()};
  for (const auto& p : nodes_) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

std::vector<int> TriMesh::dirichlet_nodes() const {
  std::set<int> nodes;
  for (const auto& e : boundary_edges_) {
    if (e.tag == BoundaryTag::kDirichlet) nodes.insert(e.nodes.begin(), e.nodes.end());
  }
  return {nodes.begin(), nodes.end()};
}

bool TriMesh::has_crack() const {
  return std::any_of(boundary_edges_.begin(), boundary_edges_.end(),
                     [](const BoundaryEdge& e) { return is_crack(e.tag); });
}

bool operator==(const TriMesh& a, const TriMesh& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    if (a.nodes_[i].x() != b.nodes_[i].x() || a.nodes_[i].y() != b.nodes_[i].y()) return false;
  }
  return a.triangles_ == b.triangles_ && a.boundary_edges_ == b.boundary_edges_ &&
         a.crack_tip_ == b.crack_tip_;
}

TriMesh gen_rect_mesh(std::pair<double, double> x_range, std::pair<double, double> y_range, int nx,
                      int ny, SideSet dirichlet, bool allow_all_neumann) {
  const auto [x0, x1] = x_range;
  const auto [y0, y1] = y_range;
  if (!(x1 > x0) || !(y1 > y0)) fail(ErrorKind::kValidation, "mesh range must have positive width");
  if (nx < 1 || ny < 1) fail(ErrorKind::kValidation, "mesh needs nx, ny >= 1");
  if ((dirichlet & kAllSides) == 0 && !allow_all_neumann) {
    fail(ErrorKind::kValidation, "no Dirichlet side given; pass allow_all_neumann explicitly");
  }

  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Endpoints are set exactly so boundary nodes sit on the range limits.
      const double x = i == nx ? x1 : x0 + (x1 - x0) * i / nx;
      const double y = j == ny ? y1 : y0 + (y1 - y0) * j / ny;
      nodes.emplace_back(x, y);
    }
  }

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({n00, n10, n11});
        tris.push_back({n00, n11, n01});
      } else {
        tris.push_back({n00, n10, n01});
        tris.push_back({n10, n11, n01});
      }
    }
  }

  auto tag_for = [dirichlet](Side side) {
    return (dirichlet & side) ? BoundaryTag::kDirichlet : BoundaryTag::kNeumann;
  };
  std::vector<BoundaryEdge> edges;
  for (int i = 0; i < nx; ++i) edges.push_back({{id(i, 0), id(i + 1, 0)}, tag_for(kBottom)});
  for (int j = 0; j < ny; ++j) edges.push_back({{id(nx, j), id(nx, j + 1)}, tag_for(kRight)});
  for (int i = nx; i > 0; --i) edges.push_back({{id(i, ny), id(i - 1, ny)}, tag_for(kTop)});
  for (int j = ny; j > 0; --j) edges.push_back({{id(0, j), id(0, j - 1)}, tag_for(kLeft)});

  return TriMesh(std::move(nodes), std::move(tris), std::move(edges));
}

TriMesh insert_crack_slit(const TriMesh& mesh, const Point& mouth, const Point& tip) {
  const Vec2 dir = tip - mouth;
  const double len = dir.norm();
  if (!(len > 0.0)) fail(ErrorKind::kValidation, "crack segment has zero length");
  if (mesh.has_crack()) fail(ErrorKind::kConfiguration, "mesh already contains a crack");
  const double tol = 1e-9 * std::max(len, mesh.max_edge_length());
  const Vec2 unit = dir / len;
  const Vec2 normal(-unit.y(), unit.x());  // points to the crack_plus side

  // Slit nodes ordered by arc length from the mouth.
  std::vector<std::pair<double, int>> on_segment;
  for (int i = 0; i < mesh.node_count(); ++i) {
    const Vec2 rel = mesh.node(i) - mouth;
    const double s = rel.dot(unit);
    if (std::abs(rel.dot(normal)) <= tol && s >= -tol && s <= len + tol) on_segment.emplace_back(s, i);
  }
  std::sort(on_segment.begin(), on_segment.end());
  if (on_segment.size() < 2 || std::abs(on_segment.front().first) > tol ||
      std::abs(on_segment.back().first - len) > tol) {
    fail(ErrorKind::kTopology, "crack segment endpoints are not mesh nodes");
  }

  const auto uses = edge_uses(mesh);
  for (std::size_t k = 0; k + 1 < on_segment.size(); ++k) {
    if (!uses.count(key(on_segment[k].second, on_segment[k + 1].second))) {
      fail(ErrorKind::kTopology, "crack segment does not follow mesh edges");
    }
  }

  std::set<int> outer_boundary;
  for (const auto& e : mesh.boundary_edges()) {
    outer_boundary.insert(e.nodes.begin(), e.nodes.end());
  }
  const int mouth_node = on_segment.front().second;
  const int tip_node = on_segment.back().second;
  if (outer_boundary.count(tip_node)) {
    fail(ErrorKind::kConfiguration, "crack tip on the boundary is not supported");
  }
  if (!outer_boundary.count(mouth_node)) {
    fail(ErrorKind::kConfiguration, "crack mouth must lie on the outer boundary (single tip only)");
  }
  for (std::size_t k = 1; k + 1 < on_segment.size(); ++k) {
    if (outer_boundary.count(on_segment[k].second)) {
      fail(ErrorKind::kConfiguration, "crack segment touches the outer boundary between its ends");
    }
  }

  // Remember which triangle owns every existing boundary edge, so the edge
  // can follow its triangle through the rewiring.
  std::vector<std::pair<int, int>> owner;  // (triangle, local index of edge start)
  for (const auto& e : mesh.boundary_edges()) {
    const auto it = uses.find(key(e.nodes[0], e.nodes[1]));
    if (it == uses.end() || it->second.size() != 1) {
      fail(ErrorKind::kTopology, "boundary edge is not owned by exactly one triangle");
    }
    const auto& tri = mesh.triangle(it->second.front().triangle);
    const int local = static_cast<int>(std::find(tri.begin(), tri.end(), e.nodes[0]) - tri.begin());
    owner.emplace_back(it->second.front().triangle, local);
  }

  std::vector<Point> nodes = mesh.nodes();
  std::vector<Triangle> tris = mesh.triangles();
  std::vector<int> minus_copy(on_segment.size(), -1);
  for (std::size_t k = 0; k + 1 < on_segment.size(); ++k) {
    const int original = on_segment[k].second;
    const int copy = static_cast<int>(nodes.size());
    nodes.push_back(mesh.node(original));
    minus_copy[k] = copy;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      auto& tri = tris[static_cast<std::size_t>(t)];
      for (auto& v : tri) {
        if (v != original) continue;
        const double side = (mesh.centroid(t) - mesh.node(original)).dot(normal);
        if (side < 0.0) v = copy;
      }
    }
  }
  minus_copy.back() = tip_node;

  std::vector<BoundaryEdge> edges;
  edges.reserve(mesh.boundary_edges().size() + 2 * (on_segment.size() - 1));
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& [t, local] = owner[e];
    const auto& tri = tris[static_cast<std::size_t>(t)];
    edges.push_back({{tri[static_cast<std::size_t>(local)],
                      tri[static_cast<std::size_t>((local + 1) % 3)]},
                     mesh.boundary_edges()[e].tag});
  }
  // Plus face lies left of mouth->tip, so its owning triangles traverse the
  // slit mouth->tip; the minus face runs tip->mouth.
  for (std::size_t k = 0; k + 1 < on_segment.size(); ++k) {
    edges.push_back({{on_segment[k].second, on_segment[k + 1].second}, BoundaryTag::kCrackPlus});
  }
  for (std::size_t k = 0; k + 1 < on_segment.size(); ++k) {
    edges.push_back({{minus_copy[k + 1], minus_copy[k]}, BoundaryTag::kCrackMinus});
  }

  return TriMesh(std::move(nodes), std::move(tris), std::move(edges), tip_node, mesh.domain_box());
}

ValidationReport validate(const TriMesh& mesh) {
  ValidationReport report;
  auto problem = [&report](std::string text) {
    report.ok = false;
    report.problems.push_back(std::move(text));
  };

  report.min_area = mesh.triangle_count() ? mesh.area(0) : 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double a = mesh.area(t);
    report.min_area = std::min(report.min_area, a);
    if (!(a > 0.0)) problem("triangle " + std::to_string(t) + " has nonpositive signed area");
  }

  const auto uses = edge_uses(mesh);
  std::map<EdgeKey, const EdgeUse*> topo_boundary;
  for (const auto& [k, list] : uses) {
    if (list.size() > 2) problem("edge shared by more than two triangles");
    if (list.size() == 2 && list[0].from == list[1].from) problem("inconsistent triangle orientation");
    if (list.size() == 1) topo_boundary.emplace(k, &list.front());
  }

  std::set<EdgeKey> tagged;
  for (const auto& e : mesh.boundary_edges()) {
    const EdgeKey k = key(e.nodes[0], e.nodes[1]);
    if (!tagged.insert(k).second) problem("duplicate boundary edge");
    const auto it = topo_boundary.find(k);
    if (it == topo_boundary.end()) {
      problem("tagged edge " + std::to_string(e.nodes[0]) + "-" + std::to_string(e.nodes[1]) +
              " is not a topological boundary edge");
    } else if (it->second->from != e.nodes[0]) {
      problem("boundary edge orientation does not match its triangle");
    }
  }
  if (tagged.size() != topo_boundary.size()) problem("boundary edges do not cover the boundary");
  report.boundary_edge_count = static_cast<int>(mesh.boundary_edges().size());

  // Crack faces: coincident geometry, distinct indices away from the tip.
  using Segment = std::pair<std::pair<double, double>, std::pair<double, double>>;
  auto geometric = [&mesh](const BoundaryEdge& e) {
    auto a = std::make_pair(mesh.node(e.nodes[0]).x(), mesh.node(e.nodes[0]).y());
    auto b = std::make_pair(mesh.node(e.nodes[1]).x(), mesh.node(e.nodes[1]).y());
    return a < b ? Segment{a, b} : Segment{b, a};
  };
  std::multiset<Segment> plus, minus;
  std::set<int> plus_nodes, minus_nodes;
  for (const auto& e : mesh.boundary_edges()) {
    if (e.tag == BoundaryTag::kCrackPlus) {
      plus.insert(geometric(e));
      plus_nodes.insert(e.nodes.begin(), e.nodes.end());
    } else if (e.tag == BoundaryTag::kCrackMinus) {
      minus.insert(geometric(e));
      minus_nodes.insert(e.nodes.begin(), e.nodes.end());
    }
  }
  report.crack_edge_count = static_cast<int>(plus.size() + minus.size());
  if (!plus.empty() || !minus.empty()) {
    if (plus != minus) problem("crack faces are not geometrically coincident");
    if (!mesh.crack_tip()) {
      problem("crack present without a tip node");
    } else {
      const int tip = *mesh.crack_tip();
      if (!plus_nodes.count(tip) || !minus_nodes.count(tip)) problem("crack faces do not meet at the tip");
      for (int n : plus_nodes) {
        if (n != tip && minus_nodes.count(n)) problem("crack faces share a node away from the tip");
      }
    }
  } else if (mesh.crack_tip()) {
    problem("crack tip declared without crack edges");
  }

  for (int i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.domain_box().contains_strictly(mesh.node(i))) {
      problem("node " + std::to_string(i) + " outside the reference box");
      break;
    }
  }
  return report;
}

TriMesh deform_mesh(const TriMesh& mesh, const deformation::VelocityField& mu, double t) {
  if (!(deformation::bilipschitz_margin(mu, t) > 0.0)) {
    std::ostringstream msg;
    msg << "deformation too large: |t| * lip = " << std::abs(t) * mu.lip_bound() << " >= 1";
    fail(ErrorKind::kDeformationTooLarge, msg.str());
  }
  if (t == 0.0) return mesh;

  std::vector<Point> nodes;
  nodes.reserve(mesh.nodes().size());
  for (const auto& x : mesh.nodes()) nodes.push_back(x + t * mu(x));

  TriMesh moved(std::move(nodes), mesh.triangles(), mesh.boundary_edges(), mesh.crack_tip(),
                mesh.domain_box());
  for (int k = 0; k < moved.triangle_count(); ++k) {
    if (!(moved.area(k) > 0.0)) {
      fail(ErrorKind::kInternal,
           "triangle inverted by an admissible deformation; Lipschitz bound misdeclared");
    }
  }
  for (const auto& p : moved.nodes()) {
    if (!moved.domain_box().contains_strictly(p)) {
      fail(ErrorKind::kDeformationTooLarge, "deformed node leaves the reference box");
    }
  }
  return moved;
}

}  // namespace shaperate::mesh
