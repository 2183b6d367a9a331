#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "shaperate/deformation.hpp"
#include "shaperate/error.hpp"
#include "shaperate/fem.hpp"

namespace {

using namespace shaperate;
using namespace shaperate::fem;
using std::numbers::pi;

mesh::TriMesh square(int n, mesh::SideSet sides = mesh::kAllSides) {
  return mesh::gen_rect_mesh({0.0, 1.0}, {0.0, 1.0}, n, n, sides);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kInternal;
}

TEST(Coefficients, BuiltInSetsHaveConsistentGradients) {
  const Box box{Point(0.05, 0.05), Point(0.95, 0.95)};
  for (const auto& c : {poisson_manufactured(), constant(2.0, 0.3, 1.0, 0.5, 1.0),
                        oracle::variable_coefficients()}) {
    const auto r = verify_coefficients(c, box, 200, 4);
    EXPECT_TRUE(r.ok(c.beta0)) << c.name << " gradient error " << r.gradient_error;
  }
}

TEST(Coefficients, ConstantRejectsIndefiniteOrNegativeMass) {
  EXPECT_EQ(kind_of([] { constant(1.0, 2.0, 1.0, 0.0, 1.0); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([] { constant(1.0, 0.0, 1.0, -1.0, 1.0); }), ErrorKind::kValidation);
}

TEST(Coefficients, IntegrandDerivatives) {
  const auto c = oracle::variable_coefficients();
  const Point x(0.3, 0.7);
  const double eta = 0.4;
  const Vec2 zeta(0.9, -1.3);
  const double h = 1e-6;
  Vec2 fd_xi, fd_zeta;
  for (int k = 0; k < 2; ++k) {
    Point xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    fd_xi[k] = (c.W(xp, eta, zeta) - c.W(xm, eta, zeta)) / (2 * h);
    Vec2 zp = zeta, zm = zeta;
    zp[k] += h;
    zm[k] -= h;
    fd_zeta[k] = (c.W(x, eta, zp) - c.W(x, eta, zm)) / (2 * h);
  }
  EXPECT_LT((c.grad_xi_W(x, eta, zeta) - fd_xi).norm(), 1e-8);
  EXPECT_LT((c.grad_zeta_W(x, zeta) - fd_zeta).norm(), 1e-8);
  EXPECT_NEAR(c.W_eta(x, eta), (c.W(x, eta + h, zeta) - c.W(x, eta - h, zeta)) / (2 * h), 1e-8);
}

TEST(Mode3, ValueAndGradient) {
  const Point tip(0.0, 0.0);
  const Vec2 dir(1.0, 0.0);
  EXPECT_NEAR(mode3_value(Point(0.0, 0.25), tip, dir), 0.5 * std::sin(pi / 4), 1e-15);
  EXPECT_NEAR(mode3_value(Point(-1.0, 1e-12), tip, dir), 1.0, 1e-9);
  EXPECT_NEAR(mode3_value(Point(-1.0, -1e-12), tip, dir), -1.0, 1e-9);
  const Point x(0.3, -0.4);
  const double h = 1e-7;
  const Vec2 fd((mode3_value(x + Vec2(h, 0), tip, dir) - mode3_value(x - Vec2(h, 0), tip, dir)) / (2 * h),
                (mode3_value(x + Vec2(0, h), tip, dir) - mode3_value(x - Vec2(0, h), tip, dir)) / (2 * h));
  EXPECT_LT((mode3_gradient(x, tip, dir) - fd).norm(), 1e-7);
  // A rotated frame gives the same field in rotated coordinates.
  EXPECT_NEAR(mode3_value(Point(1.0, 1.5), Point(1.0, 1.0), Vec2(0.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(mode3_value(Point(0.5, 1.0), Point(1.0, 1.0), Vec2(0.0, 1.0)), 0.5, 1e-15);
}

TEST(Assemble, MatrixIsSymmetricAndReproducesLinearFields) {
  // With b = f = 0 the discrete problem reproduces any linear Dirichlet datum.
  auto c = constant(1.0, 0.0, 1.0, 0.0, 0.0);
  c.g = [](const Point& p) { return 2.0 * p.x() - 3.0 * p.y() + 0.5; };
  const auto m = square(6);
  const auto sys = assemble(m, c);
  const Eigen::SparseMatrix<double> diff = sys.matrix - Eigen::SparseMatrix<double>(sys.matrix.transpose());
  EXPECT_LT(diff.norm(), 1e-14);
  const auto u = solve(sys, 1e-13);
  for (int i = 0; i < m.node_count(); ++i) EXPECT_NEAR(u[i], c.g(m.node(i)), 1e-11);
}

TEST(Assemble, SolutionMatchesIndependentDenseSolve) {
  const auto m = square(9);
  const auto c = oracle::variable_coefficients();
  const auto u = solve(assemble(m, c), 1e-13);
  const Eigen::VectorXd ref = oracle::dense_minimizer(m, m.nodes(), c);
  EXPECT_LT((u.values() - ref).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_NEAR(energy(m, c, u), oracle::energy(m, m.nodes(), c, ref), 1e-13);
}

TEST(Assemble, CrackedProblemMatchesDenseSolve) {
  const auto m = mesh::insert_crack_slit(mesh::gen_rect_mesh({-1.0, 1.0}, {-1.0, 1.0}, 8, 8, mesh::kAllSides),
                                         Point(-1.0, 0.0), Point(0.0, 0.0));
  const auto c = mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto u = solve(assemble(m, c), 1e-13);
  const Eigen::VectorXd ref = oracle::dense_minimizer(m, m.nodes(), c);
  EXPECT_LT((u.values() - ref).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Assemble, AllNeumannNeedsPositiveMass) {
  EXPECT_THROW(square(4, 0), Error);  // generator guards the empty Dirichlet set
  const auto neumann = mesh::gen_rect_mesh({0.0, 1.0}, {0.0, 1.0}, 4, 4, 0, true);
  EXPECT_EQ(kind_of([&] { assemble(neumann, constant(1.0, 0.0, 1.0, 0.0, 1.0)); }),
            ErrorKind::kConfiguration);
  const auto u = solve(assemble(neumann, constant(1.0, 0.0, 1.0, 2.0, 1.0)), 1e-13);
  for (int i = 0; i < neumann.node_count(); ++i) EXPECT_NEAR(u[i], 0.5, 1e-10);
}

TEST(Solve, ManufacturedNodalErrorConvergesQuadratically) {
  const auto c = poisson_manufactured();
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    const auto m = square(n);
    const auto u = solve(assemble(m, c), 1e-12);
    double e = 0.0;
    for (int i = 0; i < m.node_count(); ++i) {
      e = std::max(e, std::abs(u[i] - oracle::manufactured_exact(m.node(i))));
    }
    hs.push_back(1.0 / n);
    errs.push_back(e);
  }
  EXPECT_GE(oracle::observed_order(hs, errs), 1.9);
}

TEST(Solve, ReportsStatsAndHistory) {
  const auto m = square(10);
  SolveStats stats;
  solve(assemble(m, poisson_manufactured()), 1e-10, &stats);
  EXPECT_GT(stats.iterations, 0);
  EXPECT_LE(stats.relative_residual, 1e-10);
  EXPECT_EQ(stats.history.size(), static_cast<std::size_t>(stats.iterations) + 1);
}

TEST(Solve, IterationCapRaisesSolverErrorWithHistory) {
  const auto m = square(16);
  try {
    solve(assemble(m, oracle::variable_coefficients()), 1e-14, nullptr, 3);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSolver);
    EXPECT_EQ(e.residual_history().size(), 4u);
    EXPECT_GT(e.last_residual(), 1e-14);
  }
}

TEST(Energy, MinimizerIsStationaryAndMinimal) {
  const auto m = square(8);
  const auto c = oracle::variable_coefficients();
  const auto u = solve(assemble(m, c), 1e-13);
  EXPECT_LT(relative_galerkin_residual(m, c, u), 1e-10);
  auto bump = DiscreteField::interpolate(m, [](const Point& p) {
    return std::sin(pi * p.x()) * std::sin(pi * p.y());
  });
  EXPECT_NEAR(weak_residual(m, c, u, bump), 0.0, 1e-11);
  DiscreteField perturbed(m, u.values() + 1e-3 * bump.values());
  EXPECT_GT(energy(m, c, perturbed), energy(m, c, u));
  // E(u + s v) - E(u) = s^2/2 a(v, v) since the linear term vanishes.
  DiscreteField neg(m, u.values() - 1e-3 * bump.values());
  EXPECT_NEAR(energy(m, c, perturbed) - energy(m, c, u), energy(m, c, neg) - energy(m, c, u), 1e-13);
}

TEST(Energy, WeakResidualRequiresVanishingTestFunction) {
  const auto m = square(4);
  const auto c = poisson_manufactured();
  const auto u = solve(assemble(m, c), 1e-12);
  const auto ones = DiscreteField::interpolate(m, [](const Point&) { return 1.0; });
  EXPECT_EQ(kind_of([&] { weak_residual(m, c, u, ones); }), ErrorKind::kPrecondition);
}

TEST(Energy, PulledBackEnergyMatchesEnergyOnDeformedMesh) {
  // For affine deformations and constant coefficients the pullback is exact.
  const auto m = square(6);
  const auto c = constant(1.3, 0.2, 0.8, 0.4, 1.1);
  const auto u = solve(assemble(m, c), 1e-12);
  const auto mu = deformation::stretch_x() + deformation::rotate(Point(0.5, 0.5)).scaled(0.4);
  const deformation::Deformation d(mu, 0.3);
  const auto moved = mesh::deform_mesh(m, mu, 0.3);
  EXPECT_NEAR(pulled_back_energy(m, c, u, d), energy(moved, c, u), 1e-13);
}

TEST(Field, SizeIsChecked) {
  const auto m = square(3);
  const DiscreteField wrong(m, Eigen::VectorXd::Zero(m.node_count()));
  const auto other = square(4);
  EXPECT_EQ(kind_of([&] { wrong.check_on(other); }), ErrorKind::kValidation);
}

TEST(Export, CsvAndVtk) {
  const auto m = square(2);
  const auto u = DiscreteField::interpolate(m, [](const Point& p) { return p.x() + 2 * p.y(); });
  std::stringstream csv, vtk;
  write_solution_csv(m, u, csv);
  write_solution_vtk(m, u, vtk);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "node_id,x,y,u");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, m.node_count());
  const std::string v = vtk.str();
  EXPECT_EQ(v.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(v.find("POINTS 9"), std::string::npos);
  EXPECT_NE(v.find("CELLS 8 32"), std::string::npos);
  EXPECT_NE(v.find("SCALARS u"), std::string::npos);
}

}  // namespace
