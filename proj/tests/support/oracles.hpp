#pragma once

// Independent reference computations for tests. Nothing here calls the
// library's assembly, solver, shape or derivative code; only mesh data and
// coefficient callbacks are shared.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "shaperate/fem.hpp"
#include "shaperate/mesh.hpp"
#include "shaperate/param_variation.hpp"

namespace shaperate::oracle {

using std::numbers::pi;

/// Gradient of the linear interpolant on triangle (p0, p1, p2).
inline Vec2 linear_gradient(const Point& p0, const Point& p1, const Point& p2, double v0, double v1,
                            double v2) {
  Mat2 m;
  m.col(0) = p1 - p0;
  m.col(1) = p2 - p0;
  return m.transpose().inverse() * Vec2(v1 - v0, v2 - v0);
}

/// Nodes moved by x -> x + t mu(x).
inline std::vector<Point> moved_nodes(const std::vector<Point>& nodes,
                                      const std::function<Vec2(const Point&)>& mu, double t) {
  std::vector<Point> out;
  out.reserve(nodes.size());
  for (const auto& x : nodes) out.push_back(x + t * mu(x));
  return out;
}

/// Dirichlet values; nodes on a slit take g slightly inside an adjacent triangle.
inline std::vector<std::pair<int, double>> dirichlet_data(const mesh::TriMesh& m,
                                                          const std::vector<Point>& x,
                                                          const fem::CoefficientSet& c) {
  std::vector<int> owner(x.size(), -1);
  for (int t = 0; t < m.triangle_count(); ++t) {
    for (int i : m.triangle(t)) {
      if (owner[static_cast<std::size_t>(i)] < 0) owner[static_cast<std::size_t>(i)] = t;
    }
  }
  // The datum is continuous away from a slit, so only slit nodes are read from
  // inside an owning triangle.
  std::vector<bool> on_slit(x.size(), false);
  for (const auto& e : m.boundary_edges()) {
    if (mesh::is_crack(e.tag)) {
      for (int i : e.nodes) on_slit[static_cast<std::size_t>(i)] = true;
    }
  }
  std::vector<std::pair<int, double>> out;
  for (int i : m.dirichlet_nodes()) {
    if (!on_slit[static_cast<std::size_t>(i)]) {
      out.emplace_back(i, c.g(x[static_cast<std::size_t>(i)]));
      continue;
    }
    const auto& tri = m.triangle(owner[static_cast<std::size_t>(i)]);
    const Point cen = (x[static_cast<std::size_t>(tri[0])] + x[static_cast<std::size_t>(tri[1])] +
                       x[static_cast<std::size_t>(tri[2])]) / 3.0;
    const Point& p = x[static_cast<std::size_t>(i)];
    out.emplace_back(i, c.g(p + 1e-9 * (cen - p)));
  }
  return out;
}

/// Discrete energy of a nodal vector with centroid quadrature.
inline double energy(const mesh::TriMesh& m, const std::vector<Point>& x,
                     const fem::CoefficientSet& c, const Eigen::VectorXd& v) {
  double e = 0.0;
  for (const auto& tri : m.triangles()) {
    const Point& a = x[static_cast<std::size_t>(tri[0])];
    const Point& b = x[static_cast<std::size_t>(tri[1])];
    const Point& d = x[static_cast<std::size_t>(tri[2])];
    const double area = 0.5 * std::abs((b - a).x() * (d - a).y() - (d - a).x() * (b - a).y());
    const Point cen = (a + b + d) / 3.0;
    const Vec2 grad = linear_gradient(a, b, d, v[tri[0]], v[tri[1]], v[tri[2]]);
    const double mean = (v[tri[0]] + v[tri[1]] + v[tri[2]]) / 3.0;
    const double w = 0.5 * grad.dot(c.B(cen) * grad) + 0.5 * c.b(cen) * mean * mean - c.f(cen) * mean;
    e += w * area;
  }
  return e;
}

/// Minimizer of the discrete energy on nodes `x` by dense Cholesky on free nodes.
/// The system matrix is built by probing the quadratic energy, not by element formulas.
inline Eigen::VectorXd dense_minimizer(const mesh::TriMesh& m, const std::vector<Point>& x,
                                       const fem::CoefficientSet& c) {
  const int n = m.node_count();
  Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);
  for (const auto& [i, g] : dirichlet_data(m, x, c)) {
    base[i] = g;
    fixed[static_cast<std::size_t>(i)] = true;
  }
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  }
  const int nf = static_cast<int>(free_idx.size());
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < nf; ++k) pos[static_cast<std::size_t>(free_idx[static_cast<std::size_t>(k)])] = k;

  // Per element: E_T(v) = 1/2 v^T K_T v - F_T^T v, with K_T and F_T recovered
  // from the element energy at unit and pair probes.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(nf);
  for (const auto& tri : m.triangles()) {
    const Point& a = x[static_cast<std::size_t>(tri[0])];
    const Point& b = x[static_cast<std::size_t>(tri[1])];
    const Point& d = x[static_cast<std::size_t>(tri[2])];
    const double area = 0.5 * std::abs((b - a).x() * (d - a).y() - (d - a).x() * (b - a).y());
    const Point cen = (a + b + d) / 3.0;
    auto local = [&](const Eigen::Vector3d& v) {
      const Vec2 grad = linear_gradient(a, b, d, v[0], v[1], v[2]);
      const double mean = v.sum() / 3.0;
      return area * (0.5 * grad.dot(c.B(cen) * grad) + 0.5 * c.b(cen) * mean * mean - c.f(cen) * mean);
    };
    Eigen::Matrix3d kt;
    Eigen::Vector3d ft;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d ei = Eigen::Vector3d::Unit(i);
      // E(e_i) - E(-e_i) = -2 F_i;  E(e_i) + E(-e_i) = K_ii.
      ft[i] = -(local(ei) - local(-ei)) / 2.0;
      kt(i, i) = local(ei) + local(-ei);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const Eigen::Vector3d s = Eigen::Vector3d::Unit(i) + Eigen::Vector3d::Unit(j);
        const double quad = local(s) + local(-s);  // = s^T K s
        kt(i, j) = kt(j, i) = 0.5 * (quad - kt(i, i) - kt(j, j));
      }
    }
    for (int i = 0; i < 3; ++i) {
      const int pi_ = pos[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
      if (pi_ < 0) continue;
      F[pi_] += ft[i];
      for (int j = 0; j < 3; ++j) {
        const int node_j = tri[static_cast<std::size_t>(j)];
        const int pj = pos[static_cast<std::size_t>(node_j)];
        if (pj >= 0) {
          K(pi_, pj) += kt(i, j);
        } else {
          F[pi_] -= kt(i, j) * base[node_j];
        }
      }
    }
  }
  const Eigen::VectorXd sol = K.llt().solve(F);
  Eigen::VectorXd v = base;
  for (int k = 0; k < nf; ++k) v[free_idx[static_cast<std::size_t>(k)]] = sol[k];
  return v;
}

/// Minimized discrete energy on the mesh moved by t mu.
inline double minimized_energy(const mesh::TriMesh& m, const fem::CoefficientSet& c,
                               const std::function<Vec2(const Point&)>& mu, double t) {
  const auto x = moved_nodes(m.nodes(), mu, t);
  return energy(m, x, c, dense_minimizer(m, x, c));
}

/// Central difference of the minimized energy along mu.
inline double fd_shape_derivative(const mesh::TriMesh& m, const fem::CoefficientSet& c,
                                  const std::function<Vec2(const Point&)>& mu, double step) {
  return (minimized_energy(m, c, mu, step) - minimized_energy(m, c, mu, -step)) / (2.0 * step);
}

/// Closed-form optimal value of the quadratic family:
/// J*(mu) = -1/2 r^T K^{-1} r + 1/2 mu^T P mu + c^T mu with r = f0 + L mu.
inline double quadratic_optimal_value(const param_variation::QuadraticFamilyData& d,
                                      const Eigen::VectorXd& mu) {
  const Eigen::VectorXd r = d.f0 + d.L * mu;
  return -0.5 * r.dot(d.K.ldlt().solve(r)) + 0.5 * mu.dot(d.P * mu) + d.c.dot(mu);
}

inline Eigen::VectorXd quadratic_minimizer(const param_variation::QuadraticFamilyData& d,
                                           const Eigen::VectorXd& mu) {
  return d.K.ldlt().solve(d.f0 + d.L * mu);
}

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (fn(xp) - fn(xm)) / (2 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function (column j = d/dx_j).
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (fn(xp) - fn(xm)) / (2 * h);
  }
  return jac;
}

/// Second-order central-difference Hessian of a scalar function.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& fn,
                                  const Eigen::VectorXd& x, double h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Eigen::VectorXd y = x;
        y[i] += si * h;
        y[j] += sj * h;
        return fn(y);
      };
      hess(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
    }
  }
  return hess;
}

/// Smooth variable coefficients on the unit square with g = 0:
/// B = [[1 + x^2/2, xy/5], [xy/5, 1 + 3y^2/10]], b = 1 + x, f = 1 + sin(x + y).
inline fem::CoefficientSet variable_coefficients() {
  fem::CoefficientSet c;
  c.name = "variable";
  c.B = [](const Point& p) {
    Mat2 m;
    m << 1 + 0.5 * p.x() * p.x(), 0.2 * p.x() * p.y(), 0.2 * p.x() * p.y(), 1 + 0.3 * p.y() * p.y();
    return m;
  };
  c.grad_B = [](const Point& p) {
    Mat2 dx, dy;
    dx << p.x(), 0.2 * p.y(), 0.2 * p.y(), 0.0;
    dy << 0.0, 0.2 * p.x(), 0.2 * p.x(), 0.6 * p.y();
    return std::array<Mat2, 2>{dx, dy};
  };
  c.b = [](const Point& p) { return 1.0 + p.x(); };
  c.grad_b = [](const Point&) { return Vec2(1.0, 0.0); };
  c.f = [](const Point& p) { return 1.0 + std::sin(p.x() + p.y()); };
  c.grad_f = [](const Point& p) {
    const double cs = std::cos(p.x() + p.y());
    return Vec2(cs, cs);
  };
  c.g = [](const Point&) { return 0.0; };
  c.beta0 = 0.5;
  return c;
}

/// Exact solution of the manufactured Poisson problem.
inline double manufactured_exact(const Point& p) {
  return std::sin(pi * p.x()) * std::sin(pi * p.y());
}

/// Least-squares slope of log(err) against log(h).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lx = std::log(h[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace shaperate::oracle
