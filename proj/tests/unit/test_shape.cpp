#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "shaperate/deformation.hpp"
#include "shaperate/error.hpp"
#include "shaperate/fem.hpp"
#include "shaperate/shape.hpp"

namespace {

using namespace shaperate;
using namespace shaperate::shape;
using std::numbers::pi;

mesh::TriMesh square(int n) { return mesh::gen_rect_mesh({0.0, 1.0}, {0.0, 1.0}, n, n, mesh::kAllSides); }

mesh::TriMesh cracked(int n) {
  return mesh::insert_crack_slit(mesh::gen_rect_mesh({-1.0, 1.0}, {-1.0, 1.0}, n, n, mesh::kAllSides),
                                 Point(-1.0, 0.0), Point(0.0, 0.0));
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

TEST(ShapeDerivative, MatchesDenseFiniteDifferenceOracle) {
  const auto m = square(12);
  const auto c = oracle::variable_coefficients();
  const auto u = fem::solve(fem::assemble(m, c), 1e-13);
  for (const auto& mu : {deformation::stretch_x(), deformation::rotate(Point(0.4, 0.6)),
                         deformation::bump(Box{Point(0.2, 0.3), Point(0.6, 0.8)}, Vec2(1.0, 0.5))}) {
    const double domain = shape_derivative_domain(m, c, u, mu).value;
    const double fd = oracle::fd_shape_derivative(m, c, [&](const Point& x) { return mu(x); }, 1e-4);
    EXPECT_NEAR(domain, fd, 1e-7 * (1.0 + std::abs(domain))) << mu.descriptor();
  }
}

TEST(ShapeDerivative, LibraryOracleAgreesWithIndependentOracle) {
  const auto m = square(8);
  const auto c = fem::poisson_manufactured();
  const auto mu = deformation::stretch_x();
  const double lib = fd_oracle(m, c, mu, 1e-4);
  const double ref = oracle::fd_shape_derivative(m, c, [&](const Point& x) { return mu(x); }, 1e-4);
  EXPECT_NEAR(lib, ref, 1e-9);
}

TEST(ShapeDerivative, TermsSumToValue) {
  const auto m = square(10);
  const auto c = oracle::variable_coefficients();
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const auto r = shape_derivative_domain(m, c, u, deformation::stretch_x());
  EXPECT_DOUBLE_EQ(r.value, r.term_xi + r.term_grad + r.term_div);
  EXPECT_NEAR(r.mesh_h, std::sqrt(2.0) / 10, 1e-15);
  EXPECT_EQ(r.field, "stretch_x");
}

TEST(ShapeDerivative, TranslationAndRotationInvariance) {
  const auto general = fem::constant(2.0, 0.3, 1.0, 0.5, 1.0);
  const auto isotropic = fem::constant(1.5, 0.0, 1.5, 0.5, 1.0);
  for (const auto& m : {square(7), cracked(6)}) {
    const auto ug = fem::solve(fem::assemble(m, general), 1e-12);
    const auto ui = fem::solve(fem::assemble(m, isotropic), 1e-12);
    for (auto sampling : {VelocitySampling::kInterpolated, VelocitySampling::kAnalytic}) {
      EXPECT_LE(std::abs(shape_derivative_domain(m, general, ug, deformation::translate(1.0, -2.0), sampling)
                             .value),
                1e-10);
      EXPECT_LE(std::abs(shape_derivative_domain(m, isotropic, ui, deformation::rotate(Point(0.3, 0.1)),
                                                 sampling)
                             .value),
                1e-10);
    }
  }
}

TEST(ShapeDerivative, RejectsUnsolvedField) {
  const auto m = square(6);
  const auto c = fem::poisson_manufactured();
  const auto zero = fem::DiscreteField::zeros(m);
  EXPECT_EQ(kind_of([&] { shape_derivative_domain(m, c, zero, deformation::stretch_x()); }),
            ErrorKind::kPrecondition);
}

TEST(BoundaryFormula, AgreesWithDomainFormulaForPoisson) {
  const auto m = square(32);
  const auto c = fem::poisson_manufactured();
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const double domain = shape_derivative_domain(m, c, u, deformation::stretch_x()).value;
  const double boundary = dirichlet_boundary_formula(m, c, u, deformation::stretch_x());
  EXPECT_NEAR(domain, boundary, 1e-3);
  EXPECT_NEAR(boundary, -pi * pi / 4, 0.02 * pi * pi / 4);
}

TEST(BoundaryFormula, RequiresIdentityStiffnessAndNoMass) {
  const auto m = square(4);
  const auto c = fem::constant(2.0, 0.0, 1.0, 0.0, 1.0);
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  EXPECT_EQ(kind_of([&] { dirichlet_boundary_formula(m, c, u, deformation::stretch_x()); }),
            ErrorKind::kPrecondition);
}

TEST(JIntegral, AnalyticFieldIsPathIndependent) {
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto field = mode3_field(Point::Zero(), Vec2(1.0, 0.0));
  const auto mu = deformation::translate(1.0, 0.0);
  for (double r : {0.05, 0.1, 0.3, 0.7}) {
    EXPECT_NEAR(j_integral({Point::Zero(), r, 4096}, field, c, mu), pi / 4, 1e-9) << "r = " << r;
  }
  // The component along the crack normal vanishes by symmetry.
  EXPECT_NEAR(j_integral({Point::Zero(), 0.2, 4096}, field, c, deformation::translate(0.0, 1.0)), 0.0,
              1e-12);
}

TEST(JIntegral, RotatedCrackFrame) {
  const Point tip(0.3, -0.2);
  const Vec2 dir(0.6, 0.8);
  const auto c = fem::mode3_crack(tip, dir);
  const auto mu = deformation::translate(dir.x(), dir.y());
  EXPECT_NEAR(j_integral({tip, 0.15, 4096}, mode3_field(tip, dir), c, mu), pi / 4, 1e-9);
}

TEST(JIntegral, DiscreteFieldApproachesAnalyticValue) {
  const auto m = cracked(32);
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const double j = j_integral({Point::Zero(), 0.3, 2048}, m, u, c, deformation::translate(1.0, 0.0));
  EXPECT_NEAR(j, pi / 4, 0.05);
}

TEST(JIntegral, ErrorPaths) {
  const auto m = cracked(8);
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const auto mu = deformation::translate(1.0, 0.0);
  EXPECT_EQ(kind_of([&] { j_integral({Point::Zero(), 1.0, 64}, m, u, c, mu); }), ErrorKind::kGeometry);
  EXPECT_EQ(kind_of([&] { j_integral({Point::Zero(), -0.1, 64}, m, u, c, mu); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([&] { j_integral({Point::Zero(), 0.1, 0}, m, u, c, mu); }), ErrorKind::kValidation);
}

TEST(EnergyReleaseRate, NonnegativeAndNearAnalytic) {
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto m = cracked(32);
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const double G = energy_release_rate(m, c, u, Point::Zero(), Vec2(1.0, 0.0), 0.2, 0.8);
  EXPECT_GT(G, 0.0);
  EXPECT_NEAR(G, pi / 4, 0.05 * pi / 4);
  // G does not depend much on the ring.
  const double G2 = energy_release_rate(m, c, u, Point::Zero(), Vec2(1.0, 0.0), 0.3, 0.7);
  EXPECT_NEAR(G, G2, 0.02);
}

TEST(EnergyReleaseRate, ConfigurationErrors) {
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  const auto m = cracked(8);
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  EXPECT_EQ(kind_of([&] { energy_release_rate(m, c, u, Point::Zero(), Vec2(1.0, 0.0), 0.2, 1.0); }),
            ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([&] { energy_release_rate(m, c, u, Point(0.25, 0.0), Vec2(1.0, 0.0), 0.2, 0.5); }),
            ErrorKind::kConfiguration);
  const auto plain = square(4);
  const auto up = fem::solve(fem::assemble(plain, fem::poisson_manufactured()), 1e-12);
  EXPECT_EQ(kind_of([&] {
              energy_release_rate(plain, fem::poisson_manufactured(), up, Point(0.5, 0.5), Vec2(1.0, 0.0),
                                  0.1, 0.2);
            }),
            ErrorKind::kConfiguration);
}

TEST(Griffith, Verdict) {
  EXPECT_TRUE(griffith_check(1.0, 0.5).propagates);
  EXPECT_TRUE(griffith_check(0.5, 0.5).propagates);
  EXPECT_FALSE(griffith_check(0.4, 0.5).propagates);
  EXPECT_DOUBLE_EQ(griffith_check(0.4, 0.5).margin, -0.1);
  EXPECT_EQ(kind_of([] { griffith_check(1.0, 0.0); }), ErrorKind::kValidation);
}

TEST(InnerVariation, ConvergesToZeroAtSecondOrder) {
  const auto c = fem::poisson_manufactured();
  const auto mu = deformation::bump(Box{Point(0.2, 0.3), Point(0.6, 0.8)}, Vec2(1.0, 0.5));
  std::vector<double> hs, vals;
  for (int n : {8, 16, 32, 64}) {
    const auto m = square(n);
    const auto u = fem::solve(fem::assemble(m, c), 1e-12);
    hs.push_back(1.0 / n);
    vals.push_back(std::abs(inner_variation_check(m, c, u, mu)));
  }
  EXPECT_GE(oracle::observed_order(hs, vals), 1.5);
  EXPECT_LT(vals.back(), 1e-3);
}

TEST(InnerVariation, SupportMustAvoidBoundary) {
  const auto m = square(8);
  const auto c = fem::poisson_manufactured();
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  EXPECT_EQ(kind_of([&] {
              inner_variation_check(m, c, u, deformation::bump(Box{Point(0.0, 0.2), Point(0.5, 0.6)},
                                                                Vec2(1.0, 0.0)));
            }),
            ErrorKind::kPrecondition);
  EXPECT_EQ(kind_of([&] { inner_variation_check(m, c, u, deformation::stretch_x()); }),
            ErrorKind::kPrecondition);
}

}  // namespace
