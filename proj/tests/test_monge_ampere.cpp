#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "abreu/monge_ampere.hpp"

using namespace abreu;

namespace {

const PlaneFn kQuad = [](double x, double y) { return 0.5 * (x * x + y * y); };
const PlaneFn kExpU = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)); };
const PlaneFn kExpG = [](double x, double y) {
  const double s = x * x + y * y;
  return (1.0 + s) * std::exp(s);
};

double sup_error(const ScalarField& u, const PlaneFn& exact) {
  const GridPtr& g = u.grid();
  double m = 0.0;
  for (int k : g->inside_nodes()) m = std::max(m, std::abs(u[k] - exact(g->x(g->ix(k)), g->y(g->jy(k)))));
  return m;
}

}  // namespace

TEST(MongeAmpere, QuadraticIsReproduced) {
  auto g = Grid2D::build(ConvexDomain::disk(), 65);
  const MAResult res = solve_ma(g, ScalarField(g, 1.0), kQuad);
  ASSERT_TRUE(res.report.converged) << res.report.message;
  EXPECT_LE(sup_error(res.u, kQuad), 5e-3);
  EXPECT_LE(sup_error(res.u, kQuad), 1e-9);  // the scheme is exact on quadratics
  for (std::size_t i = 1; i < res.report.residual_history.size(); ++i)
    EXPECT_LE(res.report.residual_history[i][0], res.report.residual_history[i - 1][0]);
}

TEST(MongeAmpere, SecondOrderOnExponential) {
  double err[2];
  int idx = 0;
  for (int n : {33, 65}) {
    auto g = Grid2D::build(ConvexDomain::disk(), n);
    const MAResult res = solve_ma(g, sample(g, kExpG), kExpU);
    ASSERT_TRUE(res.report.converged) << res.report.message;
    err[idx++] = sup_error(res.u, kExpU);
  }
  const double ratio = err[0] / err[1];
  EXPECT_GE(ratio, 3.0) << err[0] << " " << err[1];
  EXPECT_LE(ratio, 5.0) << err[0] << " " << err[1];
}

TEST(MongeAmpere, ConvergesFromHarmonicLift) {
  const PlaneFn exact = [](double x, double y) { return 0.5 * (x * x + y * y) + 0.3 * x - 0.7 * y + 0.2; };
  auto g = Grid2D::build(ConvexDomain::superellipse(4.0), 33);
  const ScalarField lift = poisson_solve(g, ScalarField(g, 0.0), exact);
  MAOptions opts;
  const MAResult res = solve_ma(g, ScalarField(g, 1.0), exact, opts, &lift);
  ASSERT_TRUE(res.report.converged) << res.report.message;
  EXPECT_LE(res.report.outer_iters, opts.max_newton);
  EXPECT_LE(sup_error(res.u, exact), 1e-8);
}

TEST(MongeAmpere, JacobianMatchesFiniteDifferences) {
  auto g = Grid2D::build(ConvexDomain::disk(), 9);
  const PlaneFn phi = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)) + 0.1 * x * y; };
  ScalarField u = sample(g, phi);
  const ScalarField rhs(g, 1.0);
  const DofMap dofs(*g);
  const SparseMatrix J = ma_jacobian(u, phi, 1e-10, dofs);

  // Column-by-column comparison with central differences (brute-force Jacobian).
  const double eps = 1e-6;
  double worst = 0.0, scale = 0.0;
  for (int c = 0; c < dofs.size(); ++c) {
    ScalarField up = u, um = u;
    up[dofs.node(c)] += eps;
    um[dofs.node(c)] -= eps;
    const ScalarField rp = ma_residual(up, rhs, phi, 1e-10), rm = ma_residual(um, rhs, phi, 1e-10);
    for (int r = 0; r < dofs.size(); ++r) {
      const double fd = (rp[dofs.node(r)] - rm[dofs.node(r)]) / (2.0 * eps);
      worst = std::max(worst, std::abs(fd - J.coeff(r, c)));
      scale = std::max(scale, std::abs(fd));
    }
  }
  EXPECT_LE(worst, 1e-6 * scale);

  // Jacobian-vector product against a directional derivative.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd v(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) v[d] = U(rng);
  const Eigen::VectorXd jv = J * v;
  ScalarField up = u, um = u;
  for (int d = 0; d < dofs.size(); ++d) {
    up[dofs.node(d)] += eps * v[d];
    um[dofs.node(d)] -= eps * v[d];
  }
  const ScalarField rp = ma_residual(up, rhs, phi, 1e-10), rm = ma_residual(um, rhs, phi, 1e-10);
  double diff = 0.0, nrm = 0.0;
  for (int d = 0; d < dofs.size(); ++d) {
    const double fd = (rp[dofs.node(d)] - rm[dofs.node(d)]) / (2.0 * eps);
    diff = std::max(diff, std::abs(fd - jv[d]));
    nrm = std::max(nrm, std::abs(jv[d]));
  }
  EXPECT_LE(diff, 1e-6 * nrm);
}

TEST(MongeAmpere, NewtonStepVanishesAtExactSolution) {
  auto g = Grid2D::build(ConvexDomain::disk(), 17);
  const NewtonStep s = newton_step(sample(g, kQuad), ScalarField(g, 1.0), kQuad);
  EXPECT_LE(sup_norm(s.delta), 1e-12);
  EXPECT_LE(s.residual_norm, 1e-12);
}

TEST(MongeAmpere, NewtonStepContractsResidual) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const PlaneFn bumped = [](double x, double y) {
    const double s = x * x + y * y;
    return 0.5 * s + 0.01 * std::pow(std::max(0.0, 1.0 - s), 3);
  };
  ScalarField u = sample(g, bumped);
  const ScalarField rhs(g, 1.0);
  const NewtonStep s = newton_step(u, rhs, kQuad);
  for (int k : g->inside_nodes()) u[k] += s.delta[k];
  const double after = sup_norm(ma_residual(u, rhs, kQuad, 1e-10));
  EXPECT_GT(s.residual_norm, 0.0);
  EXPECT_LE(after, s.residual_norm / 10.0);
}

TEST(MongeAmpere, ComparisonPrinciple) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ScalarField g1 = sample(g, [](double x, double y) { return 1.5 + 0.3 * x * y + 0.2 * x; });
  const ScalarField g2 = sample(g, [](double x, double y) { return 1.0 + 0.1 * x * y + 0.2 * x; });
  const MAResult a = solve_ma(g, g1, kQuad), b = solve_ma(g, g2, kQuad);
  ASSERT_TRUE(a.report.converged && b.report.converged);
  for (int k : g->inside_nodes()) EXPECT_LE(a.u[k], b.u[k] + 10.0 * MAOptions{}.tol);
}

TEST(MongeAmpere, RejectsNonPositiveRHSAndBadOptions) {
  auto g = Grid2D::build(ConvexDomain::disk(), 9);
  ScalarField rhs(g, 1.0);
  rhs[g->index(4, 4)] = 0.0;
  EXPECT_THROW(solve_ma(g, rhs, kQuad), NonPositiveRHS);
  MAOptions bad;
  bad.damping = 0.0;
  EXPECT_THROW(solve_ma(g, ScalarField(g, 1.0), kQuad, bad), std::invalid_argument);
}

TEST(MongeAmpere, StallReturnsBestIterate) {
  // One Newton iteration cannot reach the tolerance: the report says so.
  auto g = Grid2D::build(ConvexDomain::disk(), 17);
  MAOptions opts;
  opts.max_newton = 1;
  const MAResult res = solve_ma(g, sample(g, kExpG), kExpU, opts);
  EXPECT_FALSE(res.report.converged);
  EXPECT_FALSE(res.report.message.empty());
  EXPECT_EQ(res.report.residual_history.size(), 2u);
}

TEST(Convexity, Examples) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ConvexityCheck bowl = assert_convex(sample(g, kQuad));
  EXPECT_TRUE(bowl.ok);
  EXPECT_NEAR(bowl.min_eig, 1.0, 1e-10);
  const ConvexityCheck saddle = assert_convex(sample(g, [](double x, double y) { return 0.5 * (x * x - y * y); }));
  EXPECT_FALSE(saddle.ok);
  EXPECT_NEAR(saddle.min_eig, -1.0, 1e-10);
  // x^4 + y^4: analytic Hessian 12 diag(x^2, y^2) degenerates at the origin;
  // the discrete second difference there is 2 h^2 >= 0.
  const ConvexityCheck quartic = assert_convex(sample(g, [](double x, double y) { return x * x * x * x + y * y * y * y; }));
  const double h = g->h();
  EXPECT_GE(quartic.min_eig, 0.0);
  EXPECT_LE(quartic.min_eig, 2.0 * h * h + 1e-12);
  EXPECT_EQ(quartic.ok, quartic.min_eig >= -1e-8);
}

TEST(Convexity, ClampedDeterminant) {
  const SymMat saddle{1.0, 0.0, -1.0};
  EXPECT_DOUBLE_EQ(clamped_det(saddle, 1e-10), 1e-10);
  const SymMat spd{2.0, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(clamped_det(spd, 1e-10), spd.det());
  const SymMat c = clamped_cofactor(spd, 1e-10);
  EXPECT_DOUBLE_EQ(c.a11, 1.0);
  EXPECT_DOUBLE_EQ(c.a12, -0.5);
}
