#include "shaperate/fem.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <random>
#include <sstream>

#include <Eigen/SparseCore>

#include "shaperate/deformation.hpp"
#include "shaperate/error.hpp"

namespace shaperate::fem {
namespace {

using std::numbers::pi;

std::function<std::array<Mat2, 2>(const Point&)> zero_matrix_gradient() {
  return [](const Point&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; };
}

// Element quadratic form: K_e = |T| G B G^T + b |T| / 9 * ones, F_e = f |T| / 3.
struct ElementSystem {
  Eigen::Matrix3d K;
  Eigen::Vector3d F;
};

ElementSystem element_system(const ElementGeometry& geo, const CoefficientSet& c) {
  const Mat2 B = c.B(geo.centroid);
  const double b = c.b(geo.centroid);
  const double f = c.f(geo.centroid);
  ElementSystem es;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      es.K(i, j) = geo.area * geo.grad_lambda[static_cast<std::size_t>(i)].dot(
                                  B * geo.grad_lambda[static_cast<std::size_t>(j)]) +
                   b * geo.area / 9.0;
    }
    es.F(i) = f * geo.area / 3.0;
  }
  return es;
}

double mean(const std::array<double, 3>& v) { return (v[0] + v[1] + v[2]) / 3.0; }

}  // namespace

double CoefficientSet::W(const Point& xi, double eta, const Vec2& zeta) const {
  return 0.5 * (zeta.dot(B(xi) * zeta) + b(xi) * eta * eta) - f(xi) * eta;
}

Vec2 CoefficientSet::grad_xi_W(const Point& xi, double eta, const Vec2& zeta) const {
  const auto dB = grad_B(xi);
  const Vec2 quad(zeta.dot(dB[0] * zeta), zeta.dot(dB[1] * zeta));
  return 0.5 * (quad + grad_b(xi) * eta * eta) - grad_f(xi) * eta;
}

double CoefficientSet::W_eta(const Point& xi, double eta) const { return b(xi) * eta - f(xi); }

Vec2 CoefficientSet::grad_zeta_W(const Point& xi, const Vec2& zeta) const { return B(xi) * zeta; }

CoefficientSet poisson_manufactured() {
  CoefficientSet c;
  c.name = "poisson_manufactured";
  c.B = [](const Point&) -> Mat2 { return Mat2::Identity(); };
  c.grad_B = zero_matrix_gradient();
  c.b = [](const Point&) { return 0.0; };
  c.grad_b = [](const Point&) -> Vec2 { return Vec2::Zero(); };
  c.f = [](const Point& x) { return 2 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  c.grad_f = [](const Point& x) -> Vec2 {
    const double k = 2 * pi * pi * pi;
    return Vec2(k * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                k * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  c.g = [](const Point&) { return 0.0; };
  c.beta0 = 1.0;
  return c;
}

CoefficientSet constant(double B11, double B12, double B22, double b, double f) {
  const Mat2 B = (Mat2() << B11, B12, B12, B22).finished();
  const double lmin = 0.5 * (B11 + B22) - std::hypot(0.5 * (B11 - B22), B12);
  if (!(lmin > 0.0)) fail(ErrorKind::kValidation, "constant coefficient B is not positive definite");
  if (b < 0.0) fail(ErrorKind::kValidation, "coefficient b must be nonnegative");
  CoefficientSet c;
  std::ostringstream name;
  name << "constant(" << B11 << "," << B12 << "," << B22 << "," << b << "," << f << ")";
  c.name = name.str();
  c.B = [B](const Point&) -> Mat2 { return B; };
  c.grad_B = zero_matrix_gradient();
  c.b = [b](const Point&) { return b; };
  c.grad_b = [](const Point&) -> Vec2 { return Vec2::Zero(); };
  c.f = [f](const Point&) { return f; };
  c.grad_f = [](const Point&) -> Vec2 { return Vec2::Zero(); };
  c.g = [](const Point&) { return 0.0; };
  c.beta0 = lmin;
  return c;
}

double mode3_value(const Point& x, const Point& tip, const Vec2& direction) {
  const Vec2 rel = x - tip;
  const double along = rel.dot(direction);
  const double across = direction.x() * rel.y() - direction.y() * rel.x();
  const double theta = std::atan2(across, along);
  return std::sqrt(rel.norm()) * std::sin(0.5 * theta);
}

Vec2 mode3_gradient(const Point& x, const Point& tip, const Vec2& direction) {
  const Vec2 rel = x - tip;
  const double r = rel.norm();
  if (r == 0.0) return Vec2::Zero();
  const double along = rel.dot(direction);
  const double across = direction.x() * rel.y() - direction.y() * rel.x();
  const double theta = std::atan2(across, along);
  // grad u = (sin(theta/2) e_r + cos(theta/2) e_theta) / (2 sqrt r)
  const Vec2 e_r = rel / r;
  const Vec2 e_theta(-e_r.y(), e_r.x());
  return (std::sin(0.5 * theta) * e_r + std::cos(0.5 * theta) * e_theta) / (2.0 * std::sqrt(r));
}

CoefficientSet mode3_crack(const Point& tip, const Vec2& direction) {
  if (!(std::abs(direction.norm() - 1.0) < 1e-12)) {
    fail(ErrorKind::kValidation, "mode3 crack direction must be a unit vector");
  }
  CoefficientSet c = constant(1.0, 0.0, 1.0, 0.0, 0.0);
  std::ostringstream name;
  name << "mode3_crack(" << tip.x() << "," << tip.y() << "," << direction.x() << ","
       << direction.y() << ")";
  c.name = name.str();
  c.g = [tip, direction](const Point& x) { return mode3_value(x, tip, direction); };
  return c;
}

bool CoefficientCheckReport::ok(double beta0, double tol) const {
  return min_ellipticity >= beta0 * (1.0 - 1e-12) && min_b >= 0.0 && gradient_error <= tol;
}

CoefficientCheckReport verify_coefficients(const CoefficientSet& c, const Box& box, int samples,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.lo.x(), box.hi.x());
  std::uniform_real_distribution<double> uy(box.lo.y(), box.hi.y());
  std::uniform_real_distribution<double> angle(0.0, 2 * pi);
  CoefficientCheckReport r;
  r.min_ellipticity = 1e300;
  r.min_b = 1e300;
  const double h = 1e-6;
  for (int s = 0; s < samples; ++s) {
    const Point x(ux(rng), uy(rng));
    const double a = angle(rng);
    const Vec2 z(std::cos(a), std::sin(a));
    const Mat2 B = c.B(x);
    r.min_ellipticity = std::min(r.min_ellipticity, z.dot(B * z));
    r.min_b = std::min(r.min_b, c.b(x));

    const auto dB = c.grad_B(x);
    const Vec2 db = c.grad_b(x), df = c.grad_f(x);
    for (int i = 0; i < 2; ++i) {
      Point xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Mat2 fdB = (c.B(xp) - c.B(xm)) / (2 * h);
      const double fdb = (c.b(xp) - c.b(xm)) / (2 * h);
      const double fdf = (c.f(xp) - c.f(xm)) / (2 * h);
      const auto rel = [](double exact, double approx) {
        return std::abs(exact - approx) / (1.0 + std::abs(exact));
      };
      r.gradient_error = std::max(
          {r.gradient_error, (dB[static_cast<std::size_t>(i)] - fdB).cwiseAbs().maxCoeff() /
                                 (1.0 + dB[static_cast<std::size_t>(i)].cwiseAbs().maxCoeff()),
           rel(db[i], fdb), rel(df[i], fdf)});
    }
  }
  return r;
}

DiscreteField::DiscreteField(const mesh::TriMesh& mesh, Eigen::VectorXd values)
    : values_(std::move(values)) {
  check_on(mesh);
}

DiscreteField DiscreteField::zeros(const mesh::TriMesh& mesh) {
  return DiscreteField(mesh, Eigen::VectorXd::Zero(mesh.node_count()));
}

DiscreteField DiscreteField::interpolate(const mesh::TriMesh& mesh,
                                         const std::function<double(const Point&)>& fn) {
  Eigen::VectorXd v(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) v[i] = fn(mesh.node(i));
  return DiscreteField(mesh, std::move(v));
}

void DiscreteField::check_on(const mesh::TriMesh& mesh) const {
  if (values_.size() != mesh.node_count()) {
    fail(ErrorKind::kValidation, "discrete field length does not match mesh node count");
  }
}

ElementGeometry element_geometry(const mesh::TriMesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  const Point& a = mesh.node(tri[0]);
  const Point& b = mesh.node(tri[1]);
  const Point& c = mesh.node(tri[2]);
  ElementGeometry geo;
  geo.area = signed_area(a, b, c);
  geo.centroid = (a + b + c) / 3.0;
  const double inv2a = 1.0 / (2.0 * geo.area);
  // grad lambda_i = rot(edge opposite to i) / (2 |T|)
  geo.grad_lambda[0] = Vec2(b.y() - c.y(), c.x() - b.x()) * inv2a;
  geo.grad_lambda[1] = Vec2(c.y() - a.y(), a.x() - c.x()) * inv2a;
  geo.grad_lambda[2] = Vec2(a.y() - b.y(), b.x() - a.x()) * inv2a;
  return geo;
}

std::array<double, 3> element_values(const mesh::TriMesh& mesh, const DiscreteField& v, int t) {
  const auto& tri = mesh.triangle(t);
  return {v[tri[0]], v[tri[1]], v[tri[2]]};
}

std::map<int, double> dirichlet_values(const mesh::TriMesh& mesh, const CoefficientSet& coeffs) {
  std::set<int> crack_nodes;
  for (const auto& e : mesh.boundary_edges()) {
    if (mesh::is_crack(e.tag)) crack_nodes.insert(e.nodes.begin(), e.nodes.end());
  }
  std::map<int, Point> probe;
  for (int n : mesh.dirichlet_nodes()) probe.emplace(n, mesh.node(n));
  if (!crack_nodes.empty()) {
    // Data may jump across the slit: read g from inside the lowest-index
    // owning triangle.
    std::set<int> nudged;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      for (int v : mesh.triangle(t)) {
        if (!crack_nodes.count(v) || nudged.count(v)) continue;
        const auto it = probe.find(v);
        if (it == probe.end()) continue;
        it->second = mesh.node(v) + 1e-9 * (mesh.centroid(t) - mesh.node(v));
        nudged.insert(v);
      }
    }
  }
  std::map<int, double> values;
  for (const auto& [n, x] : probe) values.emplace(n, coeffs.g(x));
  return values;
}

LinearSystem assemble(const mesh::TriMesh& mesh, const CoefficientSet& coeffs) {
  const int n = mesh.node_count();
  LinearSystem sys;
  sys.dirichlet = dirichlet_values(mesh, coeffs);
  if (sys.dirichlet.empty()) {
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (!(coeffs.b(mesh.centroid(t)) > 0.0)) {
        fail(ErrorKind::kConfiguration,
             "singular problem: no Dirichlet boundary and b is not uniformly positive");
      }
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(9 * mesh.triangle_count()));
  sys.rhs = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    const auto es = element_system(geo, coeffs);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        triplets.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)],
                              es.K(i, j));
      }
      sys.rhs[tri[static_cast<std::size_t>(i)]] += es.F(i);
    }
  }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

DiscreteField solve(const LinearSystem& system, double tol, SolveStats* stats, int max_iters) {
  const auto n = system.matrix.rows();
  if (!(tol > 0.0)) fail(ErrorKind::kValidation, "solver tolerance must be positive");

  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  std::vector<int> free_nodes;
  for (int i = 0; i < n; ++i) {
    if (!system.dirichlet.count(i)) {
      free_index[static_cast<std::size_t>(i)] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(i);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_nodes.size());

  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (const auto& [node, value] : system.dirichlet) full[node] = value;

  // Eliminate: K_ff u_f = F_f - K_fd g_d.
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index k = 0; k < nf; ++k) rhs[k] = system.rhs[free_nodes[static_cast<std::size_t>(k)]];
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.matrix, col); it; ++it) {
      const int fr = free_index[static_cast<std::size_t>(it.row())];
      if (fr < 0) continue;
      const int fc = free_index[static_cast<std::size_t>(it.col())];
      if (fc >= 0) {
        triplets.emplace_back(fr, fc, it.value());
      } else {
        rhs[fr] -= it.value() * full[it.col()];
      }
    }
  }
  Eigen::SparseMatrix<double> A(nf, nf);
  A.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nf);
  SolveStats local;
  const double rhs_norm = rhs.norm();
  if (max_iters <= 0) max_iters = std::max<int>(1000, 10 * static_cast<int>(nf));

  if (nf > 0 && rhs_norm > 0.0) {
    const Eigen::VectorXd inv_diag = A.diagonal().cwiseInverse();
    if (!(A.diagonal().minCoeff() > 0.0)) {
      fail(ErrorKind::kCoercivity, "eliminated stiffness matrix has a nonpositive diagonal");
    }
    Eigen::VectorXd r = rhs;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    local.history.push_back(1.0);
    int it = 0;
    while (r.norm() > tol * rhs_norm) {
      if (it >= max_iters) {
        throw SolverError("conjugate gradient did not reach the requested tolerance",
                          local.history);
      }
      const Eigen::VectorXd Ap = A * p;
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) fail(ErrorKind::kCoercivity, "stiffness matrix is not positive definite");
      const double alpha = rz / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
      ++it;
      local.history.push_back(r.norm() / rhs_norm);
    }
    local.iterations = it;
    local.relative_residual = (rhs - A * x).norm() / rhs_norm;
  }

  for (Eigen::Index k = 0; k < nf; ++k) full[free_nodes[static_cast<std::size_t>(k)]] = x[k];
  if (stats) *stats = std::move(local);
  DiscreteField out;
  out.values() = std::move(full);
  return out;
}

DiscreteField solve_problem(const mesh::TriMesh& mesh, const CoefficientSet& coeffs, double tol) {
  return solve(assemble(mesh, coeffs), tol);
}

double energy(const mesh::TriMesh& mesh, const CoefficientSet& coeffs, const DiscreteField& v) {
  v.check_on(mesh);
  double sum = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    const auto nodal = element_values(mesh, v, t);
    sum += coeffs.W(geo.centroid, mean(nodal), geo.gradient(nodal)) * geo.area;
  }
  return sum;
}

double pulled_back_energy(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                          const DiscreteField& v, const deformation::Deformation& d) {
  v.check_on(mesh);
  double sum = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    const auto nodal = element_values(mesh, v, t);
    const Mat2 A = deformation::a_matrix(d, geo.centroid);
    const double k = deformation::kappa(d, geo.centroid);
    sum += coeffs.W(d.map(geo.centroid), mean(nodal), A * geo.gradient(nodal)) * k * geo.area;
  }
  return sum;
}

double weak_residual(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                     const DiscreteField& u, const DiscreteField& v) {
  u.check_on(mesh);
  v.check_on(mesh);
  const double scale = v.values().size() ? v.values().cwiseAbs().maxCoeff() : 0.0;
  for (int n : mesh.dirichlet_nodes()) {
    if (std::abs(v[n]) > 1e-14 * scale) {
      fail(ErrorKind::kPrecondition, "test field must vanish on Dirichlet nodes");
    }
  }
  double sum = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    const auto un = element_values(mesh, u, t);
    const auto vn = element_values(mesh, v, t);
    sum += (coeffs.W_eta(geo.centroid, mean(un)) * mean(vn) +
            coeffs.grad_zeta_W(geo.centroid, geo.gradient(un)).dot(geo.gradient(vn))) *
           geo.area;
  }
  return sum;
}

double relative_galerkin_residual(const mesh::TriMesh& mesh, const CoefficientSet& coeffs,
                                  const DiscreteField& u) {
  u.check_on(mesh);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.node_count());
  Eigen::VectorXd mag = Eigen::VectorXd::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    const auto es = element_system(geo, coeffs);
    const auto un = element_values(mesh, u, t);
    const Eigen::Vector3d ue(un[0], un[1], un[2]);
    const Eigen::Vector3d contrib = es.K * ue - es.F;
    const Eigen::Vector3d size = es.K.cwiseAbs() * ue.cwiseAbs() + es.F.cwiseAbs();
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      r[tri[static_cast<std::size_t>(i)]] += contrib[i];
      mag[tri[static_cast<std::size_t>(i)]] += size[i];
    }
  }
  for (int n : mesh.dirichlet_nodes()) {
    r[n] = 0.0;
    mag[n] = 0.0;
  }
  const double denom = mag.size() ? mag.maxCoeff() : 0.0;
  if (!(denom > 0.0)) return 0.0;
  return r.cwiseAbs().maxCoeff() / denom;
}

}  // namespace shaperate::fem
