#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "abreu/abreu_system.hpp"

using namespace abreu;

namespace {

const PlaneFn kQuad = [](double x, double y) { return 0.5 * (x * x + y * y); };
const PlaneFn kOne = [](double, double) { return 1.0; };

AbreuProblem quadratic_problem(double f0z) {
  AbreuProblem p;
  p.domain = ConvexDomain::disk();
  p.q = 2.0;
  p.phi = kQuad;
  p.psi = kOne;
  p.F0z = f0z::affine(0.0, f0z);
  return p;
}

double sup_error(const ScalarField& f, const PlaneFn& exact) {
  const GridPtr& g = f.grid();
  double m = 0.0;
  for (int k : g->inside_nodes()) m = std::max(m, std::abs(f[k] - exact(g->x(g->ix(k)), g->y(g->jy(k)))));
  return m;
}

}  // namespace

TEST(Abreu, QuadraticIsExact) {
  const AbreuProblem p = quadratic_problem(2.0);
  const AbreuSolution s = solve_sbvp(p, 65);
  ASSERT_TRUE(s.report.converged) << s.report.message;
  EXPECT_LE(sup_error(s.u, kQuad), 5e-3);
  EXPECT_LE(sup_error(s.w, kOne), 5e-3);
  const AbreuResidual r = abreu_residual(s.u, s.w, p);
  for (int k : s.u.grid()->inside_nodes()) {
    if (!s.u.grid()->full_interior(k)) continue;
    EXPECT_LE(std::abs(r.r1[k]), 1e-8);
    EXPECT_LE(std::abs(r.r2[k]), 1e-8);
  }
  EXPECT_TRUE(s.report.apriori.grad_bound_ok);
  EXPECT_FALSE(s.report.floor_active);
}

TEST(Abreu, MinimumPrincipleWithoutLowerOrderTerm) {
  AbreuProblem p = quadratic_problem(0.0);
  p.psi = [](double x, double y) { return 1.0 + 0.2 * x - 0.1 * y; };
  const AbreuSolution s = solve_sbvp(p, 33);
  ASSERT_TRUE(s.report.converged) << s.report.message;
  const Grid2D& g = *s.u.grid();
  const double h2 = g.h() * g.h();
  const double inf_psi = boundary_inf(g, p.psi);
  EXPECT_GE(s.report.apriori.min_w_interior, inf_psi - 10.0 * h2);
  EXPECT_LE(s.report.apriori.max_det, 1.0 / (inf_psi - 10.0 * h2));
  // w is not constant any more.
  EXPECT_GT(sup_error(s.w, kOne), 1e-2);
}

TEST(Abreu, JointResidualAfterConvergence) {
  for (Coupling c : {Coupling::kPicard, Coupling::kNewton}) {
    AbreuProblem p = quadratic_problem(0.0);
    p.scale_eps = 0.5;
    AbreuOptions opts;
    opts.coupling = c;
    const AbreuSolution s = solve_sbvp(p, 33, opts);
    ASSERT_TRUE(s.report.converged) << s.report.message;
    const AbreuResidual r = abreu_residual(s.u, s.w, p);
    EXPECT_LE(sup_norm(r.r1), 10.0 * opts.tol / p.scale_eps);
    EXPECT_LE(sup_norm(r.r2), 10.0 * opts.tol);
    const auto& last = s.report.residual_history.back();
    EXPECT_LE(std::max(last[0], last[1]), opts.tol);
  }
}

TEST(Abreu, PicardDefectNeverIncreases) {
  AbreuProblem p = quadratic_problem(0.0);
  p.q = 3.0;
  const AbreuSolution s = solve_sbvp(p, 33);
  ASSERT_TRUE(s.report.converged) << s.report.message;
  const auto& h = s.report.residual_history;
  ASSERT_GT(h.size(), 2u);
  for (std::size_t i = 1; i < h.size(); ++i)
    EXPECT_LE(std::max(h[i][0], h[i][1]), std::max(h[i - 1][0], h[i - 1][1]));
}

TEST(Abreu, ManufacturedSourceMatchesSymbolicOracle) {
  // Frozen values of L_{u*} w* + div((|Du*|^2 + delta)^((q-2)/2) Du*) and w*
  // computed symbolically (sympy) for u* = exp(r^2/2).
  struct Row {
    double q, delta, x, y, source, w;
  };
  const Row rows[] = {
      {2.0, 0.0, 0.3, -0.2, -2.5160169638607459, 0.77707560258456743},
      {2.0, 0.0, 0.5, 0.4, 1.4432172501065017, 0.47067393626689308},
      {2.0, 0.0, -0.1, 0.7, 2.2293514445183238, 0.40435377314175569},
      {1.5, 0.01, 0.3, -0.2, -2.0797771330833403, 0.77707560258456743},
      {1.5, 0.01, 0.5, 0.4, 0.85162585851480543, 0.47067393626689308},
      {1.5, 0.01, -0.1, 0.7, 1.3824759016124848, 0.40435377314175569},
      {3.0, 0.0, 0.3, -0.2, -3.4504757394090730, 0.77707560258456743},
      {3.0, 0.0, 0.5, 0.4, 2.1705482893831229, 0.47067393626689308},
      {3.0, 0.0, -0.1, 0.7, 3.6825758659932166, 0.40435377314175569},
  };
  for (const Row& r : rows) {
    const Manufactured m = manufactured_exponential(ConvexDomain::disk(), r.q, r.delta);
    EXPECT_NEAR(m.problem.F0z(r.x, r.y, 0.0), r.source, 1e-12 * std::abs(r.source));
    EXPECT_NEAR(m.w_exact(r.x, r.y), r.w, 1e-14);
  }
}

TEST(Abreu, ManufacturedSecondOrder) {
  const Manufactured m = manufactured_exponential(ConvexDomain::disk(), 2.0, 0.0);
  double eu[2], ew[2];
  int idx = 0;
  for (int n : {33, 65}) {
    const AbreuSolution s = solve_sbvp(m.problem, n);
    ASSERT_TRUE(s.report.converged) << s.report.message;
    eu[idx] = sup_error(s.u, m.u_exact);
    ew[idx] = sup_error(s.w, m.w_exact);
    ++idx;
  }
  EXPECT_GE(eu[0] / eu[1], 3.0);
  EXPECT_LE(eu[0] / eu[1], 5.0);
  EXPECT_GE(ew[0] / ew[1], 2.0);
  EXPECT_LE(ew[0] / ew[1], 5.0);
}

TEST(Abreu, PicardAndNewtonAgree) {
  const Manufactured m = manufactured_exponential(ConvexDomain::superellipse(4.0), 1.5, 0.01);
  AbreuOptions newton;
  newton.coupling = Coupling::kNewton;
  const AbreuSolution a = solve_sbvp(m.problem, 25), b = solve_sbvp(m.problem, 25, newton);
  ASSERT_TRUE(a.report.converged && b.report.converged);
  for (int k : a.u.grid()->inside_nodes()) {
    EXPECT_NEAR(a.u[k], b.u[k], 1e-6);
    EXPECT_NEAR(a.w[k], b.w[k], 1e-6);
  }
}

TEST(Abreu, Deterministic) {
  const Manufactured m = manufactured_exponential(ConvexDomain::disk(), 3.0, 0.0);
  const AbreuSolution a = solve_sbvp(m.problem, 17), b = solve_sbvp(m.problem, 17);
  const auto& va = a.u.values();
  const auto& vb = b.u.values();
  ASSERT_EQ(va.size(), vb.size());
  EXPECT_EQ(std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(a.w.values().data(), b.w.values().data(), va.size() * sizeof(double)), 0);
  EXPECT_EQ(a.report.residual_history, b.report.residual_history);
}

TEST(Abreu, ResidualIdentities) {
  const AbreuProblem p = quadratic_problem(2.0);
  auto g = Grid2D::build(p.domain, 33);
  const ScalarField u = sample(g, kQuad);
  ScalarField w(g, 1.1);
  const AbreuResidual r = abreu_residual(u, w, p);
  for (int k : g->inside_nodes()) EXPECT_NEAR(r.r2[k], 0.1, 1e-12);  // 0.1 det+ with det = 1
}

TEST(Abreu, ResidualMatchesNondivergenceEvaluation) {
  // Smooth (u, w) that do not solve anything: r1 against U^ij D_ij w - rhs
  // from closed forms, at second order.
  const PlaneFn u = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)) + 0.2 * x * y; };
  const PlaneFn w = [](double x, double y) { return 1.0 + 0.3 * std::sin(x) * y; };
  AbreuProblem p = quadratic_problem(0.0);
  p.phi = u;
  p.psi = w;
  p.F0z = f0z::affine(1.0, 0.0);
  const auto oracle = [&](double x, double y) {
    const double s = x * x + y * y, e = std::exp(0.5 * s);
    const double uxx = e * (1 + x * x), uyy = e * (1 + y * y), uxy = e * x * y + 0.2;
    const double wxx = -0.3 * std::sin(x) * y, wyy = 0.0, wxy = 0.3 * std::cos(x);
    const double Lw = uyy * wxx - 2.0 * uxy * wxy + uxx * wyy;
    return Lw - (-(uxx + uyy) + u(x, y));
  };
  double err[2];
  int idx = 0;
  for (int n : {33, 65}) {
    auto g = Grid2D::build(p.domain, n);
    const AbreuResidual r = abreu_residual(sample(g, u), sample(g, w), p);
    double e = 0.0;
    for (int k : g->inside_nodes()) {
      const double x = g->x(g->ix(k)), y = g->y(g->jy(k));
      if (x * x + y * y > 0.5) continue;
      e = std::max(e, std::abs(r.r1[k] - oracle(x, y)));
    }
    err[idx++] = e;
  }
  EXPECT_GE(err[0] / err[1], 3.0) << err[0] << " " << err[1];
}

TEST(Abreu, AprioriQuantities) {
  const AbreuProblem p = quadratic_problem(2.0);
  const AbreuSolution s = solve_sbvp(p, 33);
  const AprioriChecks& a = s.report.apriori;
  EXPECT_TRUE(a.grad_bound_ok);
  ASSERT_GE(a.argmax_grad, 0);
  EXPECT_EQ(s.u.grid()->node_class(a.argmax_grad), NodeClass::kBoundaryAdjacent);
  double wmax = 0.0;
  for (int k : s.u.grid()->inside_nodes()) wmax = std::max(wmax, s.w[k]);
  EXPECT_NEAR(a.min_det * wmax, 1.0, 1e-6);
  EXPECT_NEAR(a.min_w_boundary, 1.0, 1e-15);
  EXPECT_LE(a.sup_abs_u, 0.5);
}

TEST(Abreu, GradientBoundDetectsViolation) {
  // A non-convex profile breaks the gradient bound near the centre.
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const PlaneFn bump = [](double x, double y) { return 0.1 * std::exp(-20.0 * ((x - 0.3) * (x - 0.3) + y * y)); };
  const ScalarField u = sample(g, bump);
  const AprioriChecks a = apriori_check(u, ScalarField(g, 1.0), bump, kOne);
  EXPECT_FALSE(a.grad_bound_ok);
}

TEST(Abreu, ProblemValidation) {
  auto g = Grid2D::build(ConvexDomain::disk(), 9);
  AbreuProblem p = quadratic_problem(0.0);
  EXPECT_NO_THROW(validate(p, *g));
  p.q = 1.0;
  EXPECT_THROW(validate(p, *g), std::invalid_argument);
  p.q = 1.5;
  EXPECT_THROW(validate(p, *g), std::invalid_argument);
  p.delta = 0.01;
  EXPECT_NO_THROW(validate(p, *g));
  p.psi = [](double x, double) { return x; };
  EXPECT_THROW(validate(p, *g), std::invalid_argument);
}
