#include <algorithm>
#include <cmath>

#include "shaperate/mesh.hpp"

namespace shaperate::mesh {

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh), bounds_(mesh.node_bounds()) {
  const int n = std::max(1, mesh.triangle_count());
  const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n) / 2.0)));
  nx_ = ny_ = side;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    Point lo = mesh.node(tri[0]), hi = lo;
    for (int v : tri) {
      lo = lo.cwiseMin(mesh.node(v));
      hi = hi.cwiseMax(mesh.node(v));
    }
    for (int j = bucket_y(lo.y()); j <= bucket_y(hi.y()); ++j) {
      for (int i = bucket_x(lo.x()); i <= bucket_x(hi.x()); ++i) {
        buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(t);
      }
    }
  }
}

int PointLocator::bucket_x(double x) const {
  const double w = bounds_.hi.x() - bounds_.lo.x();
  if (!(w > 0.0)) return 0;
  return std::clamp(static_cast<int>((x - bounds_.lo.x()) / w * nx_), 0, nx_ - 1);
}

int PointLocator::bucket_y(double y) const {
  const double w = bounds_.hi.y() - bounds_.lo.y();
  if (!(w > 0.0)) return 0;
  return std::clamp(static_cast<int>((y - bounds_.lo.y()) / w * ny_), 0, ny_ - 1);
}

std::optional<PointLocator::Hit> PointLocator::locate(const Point& p) const {
  const Box grown = bounds_.expanded(1e-12 * (1.0 + bounds_.hi.x() - bounds_.lo.x()));
  if (!grown.contains(p)) return std::nullopt;

  std::optional<Hit> best;
  double best_min = -1e300;
  for (int t : buckets_[static_cast<std::size_t>(bucket_y(p.y()) * nx_ + bucket_x(p.x()))]) {
    const auto& tri = mesh_->triangle(t);
    const Point& a = mesh_->node(tri[0]);
    const Point& b = mesh_->node(tri[1]);
    const Point& c = mesh_->node(tri[2]);
    const double area = signed_area(a, b, c);
    const std::array<double, 3> bary{signed_area(p, b, c) / area, signed_area(a, p, c) / area,
                                     signed_area(a, b, p) / area};
    const double worst = std::min({bary[0], bary[1], bary[2]});
    if (worst >= 0.0) return Hit{t, bary};
    if (worst > best_min) {
      best_min = worst;
      best = Hit{t, bary};
    }
  }
  // Accept points sitting on an edge up to roundoff.
  if (best && best_min > -1e-10) return best;
  return std::nullopt;
}

}  // namespace shaperate::mesh
