#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "abreu/abreu_system.hpp"
#include "abreu/duality.hpp"

using namespace abreu;

namespace {

const PlaneFn kQuad = [](double x, double y) { return 0.5 * (x * x + y * y); };
const PlaneFn kExp = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)); };

double dual_sup_error(const LegendrePair& p, const PlaneFn& exact) {
  const Grid2D& d = *p.dual_grid;
  double e = 0.0;
  for (int k : d.inside_nodes()) e = std::max(e, std::abs(p.dual[k] - exact(d.x(d.ix(k)), d.y(d.jy(k)))));
  return e;
}

// Centered derivatives (f_xi, f_eta, f_xixi, f_etaeta, f_xieta) on a mask grid.
std::array<double, 5> centered(const ScalarField& f, int k) {
  const Grid2D& g = *f.grid();
  const int i = g.ix(k), j = g.jy(k);
  const double h = g.h();
  const auto v = [&](int a, int b) { return f[g.index(i + a, j + b)]; };
  return {(v(1, 0) - v(-1, 0)) / (2 * h), (v(0, 1) - v(0, -1)) / (2 * h),
          (v(1, 0) - 2 * v(0, 0) + v(-1, 0)) / (h * h), (v(0, 1) - 2 * v(0, 0) + v(0, -1)) / (h * h),
          (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4 * h * h)};
}

bool full3x3(const Grid2D& g, int k) {
  for (int b = -1; b <= 1; ++b)
    for (int a = -1; a <= 1; ++a)
      if (!g.inside(g.ix(k) + a, g.jy(k) + b)) return false;
  return true;
}

}  // namespace

TEST(Legendre, QuadraticIsSelfDual) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ScalarField u = sample(g, kQuad);
  const LegendrePair a = legendre_transform(u, 33, ConjugateMethod::kDiscreteMax, kQuad);
  EXPECT_LE(dual_sup_error(a, kQuad), 2.0 * g->h());
  const LegendrePair b = legendre_transform(u, 33, ConjugateMethod::kSmoothMap, kQuad);
  EXPECT_LE(dual_sup_error(b, kQuad), 1e-12);
  // The dual mask covers the unit dual disk up to one layer of nodes.
  const Grid2D& d = *a.dual_grid;
  for (int k : d.inside_nodes()) EXPECT_LE(std::hypot(d.x(d.ix(k)), d.y(d.jy(k))), 1.0);
}

TEST(Legendre, MatchesDirectMaxScan) {
  const PlaneFn kinked = [](double x, double y) { return std::abs(x) + 0.2 * x + 0.5 * y * y; };
  const PlaneFn smooth = [](double x, double y) { return std::exp(x + 0.5 * y) + x * x + y * y; };
  for (const PlaneFn& f : {kinked, smooth}) {
    auto g = Grid2D::build(ConvexDomain::disk(), 17);
    const ScalarField u = sample(g, f);
    const LegendrePair p = legendre_transform(u, 17);
    const Grid2D& d = *p.dual_grid;
    ASSERT_GT(d.inside_nodes().size(), 20u);
    for (int k : d.inside_nodes()) {
      const double y1 = d.x(d.ix(k)), y2 = d.y(d.jy(k));
      double best = -std::numeric_limits<double>::infinity();
      for (int n : g->inside_nodes()) best = std::max(best, g->x(g->ix(n)) * y1 + g->y(g->jy(n)) * y2 - u[n]);
      EXPECT_NEAR(p.dual[k], best, 1e-12 * (1.0 + std::abs(best)));
    }
  }
}

TEST(Legendre, QuarticAxisConjugate) {
  // u = x^4/4 + y^2/2 has u* = (3/4)|y1|^(4/3) + y2^2/2.
  const PlaneFn f = [](double x, double y) { return 0.25 * x * x * x * x + 0.5 * y * y; };
  auto g = Grid2D::build(ConvexDomain::square(), 65);
  const LegendrePair p = legendre_transform(sample(g, f), 65, ConjugateMethod::kDiscreteMax, f);
  const Grid2D& d = *p.dual_grid;
  int checked = 0;
  for (int k : d.inside_nodes()) {
    if (std::abs(d.y(d.jy(k))) > 1e-12) continue;
    const double y1 = d.x(d.ix(k));
    EXPECT_NEAR(p.dual[k], 0.75 * std::pow(std::abs(y1), 4.0 / 3.0), 5e-2);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Legendre, RejectsNonConvexInput) {
  auto g = Grid2D::build(ConvexDomain::disk(), 17);
  const ScalarField u = sample(g, [](double x, double y) { return x * x - y * y; });
  EXPECT_THROW(legendre_transform(u, 17), NonConvexInput);
  EXPECT_THROW(partial_legendre(sample(g, [](double x, double y) { return -x * x + y * y; })), NonConvexInput);
  EXPECT_THROW(legendre_transform(sample(g, kQuad), 2), std::invalid_argument);
}

TEST(Legendre, ConjugateReversesOrder) {
  auto g = Grid2D::build(ConvexDomain::disk(), 17);
  const ScalarField u = sample(g, kExp);
  ScalarField v = u;
  for (int k : g->inside_nodes()) v[k] += 0.05 * (1.0 + std::sin(7.0 * k));
  std::vector<std::array<double, 2>> targets;
  for (double a = -2.0; a <= 2.0; a += 0.25)
    for (double b = -2.0; b <= 2.0; b += 0.25) targets.push_back({a, b});
  const auto cu = discrete_conjugate(u, targets), cv = discrete_conjugate(v, targets);
  for (std::size_t i = 0; i < targets.size(); ++i) EXPECT_GE(cu[i], cv[i]);
}

TEST(Involution, Quadratic) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ScalarField u = sample(g, kQuad);
  for (ConjugateMethod m : {ConjugateMethod::kDiscreteMax, ConjugateMethod::kSmoothMap})
    EXPECT_LE(involution_error(legendre_transform(u, 33, m, kQuad)), 4.0 * g->h());
}

TEST(Involution, BiconjugateNeverExceeds) {
  auto g = Grid2D::build(ConvexDomain::superellipse(4.0), 33);
  const PlaneFn f = [](double x, double y) { return std::exp(x - 0.3 * y) + 0.5 * y * y + std::abs(x); };
  const ScalarField u = sample(g, f);
  const LegendrePair p = legendre_transform(u, 33);
  std::vector<std::array<double, 2>> targets;
  std::vector<int> nodes;
  for (int k : g->inside_nodes()) {
    targets.push_back({g->x(g->ix(k)), g->y(g->jy(k))});
    nodes.push_back(k);
  }
  const auto bi = discrete_conjugate(p.dual, targets);
  for (std::size_t i = 0; i < nodes.size(); ++i) EXPECT_LE(bi[i], u[nodes[i]] + 1e-12);
}

TEST(Involution, HalvesUnderRefinement) {
  double e[2];
  int idx = 0;
  for (int n : {33, 65}) {
    auto g = Grid2D::build(ConvexDomain::disk(), n);
    e[idx++] = involution_error(legendre_transform(sample(g, kExp), n, ConjugateMethod::kDiscreteMax, kExp));
  }
  EXPECT_GE(e[0] / e[1], 2.0) << e[0] << " " << e[1];
}

TEST(Legendre, DeterminantReciprocal) {
  for (int n : {33, 65}) {
    auto g = Grid2D::build(ConvexDomain::disk(), n);
    const LegendrePair p = legendre_transform(sample(g, kExp), n, ConjugateMethod::kSmoothMap, kExp);
    EXPECT_LE(det_reciprocal_error(p, kExp), 10.0 * g->h());
  }
}

TEST(Legendre, DualWeightConsistency) {
  // w* = -log det D^2u* - 1 at y equals log det D^2u(x) - 1 at x = Du*(y),
  // with det D^2u = e^s (1 + s) for u = exp(s/2), s = |x|^2.
  auto g = Grid2D::build(ConvexDomain::disk(), 65);
  const LegendrePair p = legendre_transform(sample(g, kExp), 65, ConjugateMethod::kSmoothMap, kExp);
  const Grid2D& d = *p.dual_grid;
  int checked = 0;
  for (int k : d.inside_nodes()) {
    if (!full3x3(d, k)) continue;
    const auto c = centered(p.dual, k);
    const double wstar = -std::log(c[2] * c[3] - c[4] * c[4]) - 1.0;
    const double s = c[0] * c[0] + c[1] * c[1];
    if (s > 0.64) continue;
    EXPECT_NEAR(wstar, s + std::log1p(s) - 1.0, 10.0 * g->h());
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(PartialLegendre, Quadratic) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ScalarField u = sample(g, kQuad);
  const PlaneFn exact = [](double xi, double eta) { return 0.5 * (xi * xi - eta * eta); };
  for (ConjugateMethod m : {ConjugateMethod::kDiscreteMax, ConjugateMethod::kSmoothMap}) {
    const PartialLegendrePair p = partial_legendre(u, m, kQuad);
    const Grid2D& d = *p.dual_grid;
    EXPECT_DOUBLE_EQ(d.h(), g->h());
    const double tol = m == ConjugateMethod::kSmoothMap ? 1e-12 : g->h() * g->h();
    for (int k : d.inside_nodes()) {
      EXPECT_NEAR(p.dual[k], exact(d.x(d.ix(k)), d.y(d.jy(k))), tol);
      EXPECT_NEAR(p.x1[k], d.x(d.ix(k)), m == ConjugateMethod::kSmoothMap ? 1e-12 : g->h());
    }
  }
  const ScalarField w = partial_w(partial_legendre(u, ConjugateMethod::kSmoothMap, kQuad));
  int checked = 0;
  for (int k : w.grid()->inside_nodes()) {
    if (std::isnan(w[k])) continue;
    EXPECT_NEAR(w[k], 1.0, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(PartialLegendre, QuarticInEta) {
  // u = x1^2/2 + x2^4/12: det D^2u = x2^2, so w = eta^2.
  const PlaneFn f = [](double x, double y) { return 0.5 * x * x + y * y * y * y / 12.0; };
  auto g = Grid2D::build(ConvexDomain::disk(), 65);
  const PartialLegendrePair p = partial_legendre(sample(g, f), ConjugateMethod::kSmoothMap, f);
  const ScalarField w = partial_w(p);
  const Grid2D& d = *p.dual_grid;
  int checked = 0;
  for (int k : d.inside_nodes()) {
    if (std::isnan(w[k])) continue;
    const double eta = d.y(d.jy(k));
    EXPECT_NEAR(w[k], eta * eta, 10.0 * g->h() * g->h());
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(PartialLegendre, IndependentOfX2) {
  const PlaneFn f = [](double x, double) { return 0.5 * x * x + x * x * x * x / 12.0; };
  auto g = Grid2D::build(ConvexDomain::square(), 33);
  const PartialLegendrePair p = partial_legendre(sample(g, f), ConjugateMethod::kSmoothMap, f);
  const Grid2D& d = *p.dual_grid;
  int checked = 0;
  for (int k : d.inside_nodes()) {
    if (!full3x3(d, k)) continue;
    const auto c = centered(p.dual, k);
    EXPECT_NEAR(c[1], 0.0, 1e-9);
    EXPECT_NEAR(c[4], 0.0, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(PartialLegendre, IdentitySuite) {
  // u = exp(s/2): at the corresponding point x = (x1(xi, eta), eta),
  // u_xi = x1, u_eta = -u_x2, u_xieta = -u_12/u_11, w = det D^2u.
  for (int n : {33, 65}) {
    auto g = Grid2D::build(ConvexDomain::disk(), n);
    const PartialLegendrePair p = partial_legendre(sample(g, kExp), ConjugateMethod::kSmoothMap, kExp);
    const ScalarField w = partial_w(p);
    const Grid2D& d = *p.dual_grid;
    const double tol = 10.0 * g->h();
    int checked = 0;
    for (int k : d.inside_nodes()) {
      if (!full3x3(d, k)) continue;
      const double x1 = p.x1[k], x2 = d.y(d.jy(k));
      if (x1 * x1 + x2 * x2 > 0.64) continue;
      const double e = std::exp(0.5 * (x1 * x1 + x2 * x2));
      const double u11 = e * (1 + x1 * x1), u12 = e * x1 * x2, u22 = e * (1 + x2 * x2);
      const auto c = centered(p.dual, k);
      EXPECT_NEAR(c[0], x1, tol);
      EXPECT_NEAR(c[1], -e * x2, tol);
      EXPECT_NEAR(c[2], 1.0 / u11, tol);
      EXPECT_NEAR(c[4], -u12 / u11, tol);
      EXPECT_NEAR(w[k], u11 * u22 - u12 * u12, tol * (u11 * u22));
      ++checked;
    }
    EXPECT_GT(checked, 100);
  }
}

TEST(DualResidual, QuadraticIdentities) {
  auto g = Grid2D::build(ConvexDomain::disk(), 33);
  const ScalarField u = sample(g, kQuad);
  const DualResidual lt0 = lt_dual_residual(u, 2.0, 0.0, f0z::affine(0.0, 2.0), 33, kQuad);
  const DualResidual lt2 = lt_dual_residual(u, 2.0, 0.0, f0z::zero(), 33, kQuad);
  const DualResidual plt0 = plt_dual_residual(u, 2.0, 0.0, f0z::affine(0.0, 2.0), kQuad);
  const DualResidual plt2 = plt_dual_residual(u, 2.0, 0.0, f0z::zero(), kQuad);
  ASSERT_GT(lt0.nodes.size(), 100u);
  ASSERT_GT(plt0.nodes.size(), 100u);
  EXPECT_LE(lt0.sup(), 1e-6);
  EXPECT_LE(plt0.sup(), 1e-6);
  for (int k : lt2.nodes) EXPECT_NEAR(lt2.r[k], 2.0, 1e-6);
  for (int k : plt2.nodes) EXPECT_NEAR(plt2.r[k], -2.0, 1e-6);
}

TEST(DualResidual, ExactSolutionConvergesAtSecondOrder) {
  const Manufactured m = manufactured_exponential(ConvexDomain::disk(), 2.0, 0.0);
  double lt[2], plt[2];
  int idx = 0;
  for (int n : {33, 65}) {
    auto g = Grid2D::build(m.problem.domain, n);
    const ScalarField u = sample(g, m.u_exact);
    lt[idx] = lt_dual_residual(u, 2.0, 0.0, m.problem.F0z, n, m.problem.phi).sup();
    plt[idx] = plt_dual_residual(u, 2.0, 0.0, m.problem.F0z, m.problem.phi).sup();
    ++idx;
  }
  EXPECT_GE(lt[0] / lt[1], 3.0) << lt[0] << " " << lt[1];
  EXPECT_GE(plt[0] / plt[1], 2.5) << plt[0] << " " << plt[1];
}

TEST(DualResidual, ShrinksOnSolvedSolutions) {
  struct Case {
    double q, delta;
    bool zero_source;
  };
  for (const Case c : {Case{2.0, 0.0, false}, Case{1.5, 1e-2, true}}) {
    const Manufactured m = manufactured_exponential(ConvexDomain::disk(), c.q, c.delta);
    AbreuProblem p = m.problem;
    if (c.zero_source) p.F0z = f0z::zero();
    double lt[2], plt[2];
    int idx = 0;
    for (int n : {33, 65}) {
      const AbreuSolution s = solve_sbvp(p, n);
      ASSERT_TRUE(s.report.converged) << s.report.message;
      lt[idx] = lt_dual_residual(s.u, c.q, c.delta, p.F0z, n, p.phi).sup();
      plt[idx] = plt_dual_residual(s.u, c.q, c.delta, p.F0z, p.phi).sup();
      ++idx;
    }
    EXPECT_GE(lt[0] / lt[1], 1.5) << "q=" << c.q << " " << lt[0] << " " << lt[1];
    EXPECT_GE(plt[0] / plt[1], 1.5) << "q=" << c.q << " " << plt[0] << " " << plt[1];
  }
}

TEST(Duality, BitReproducible) {
  auto g = Grid2D::build(ConvexDomain::superellipse(4.0), 33);
  const ScalarField u = sample(g, kExp);
  for (ConjugateMethod m : {ConjugateMethod::kDiscreteMax, ConjugateMethod::kSmoothMap}) {
    const LegendrePair a = legendre_transform(u, 33, m), b = legendre_transform(u, 33, m);
    ASSERT_EQ(a.dual.values().size(), b.dual.values().size());
    EXPECT_EQ(std::memcmp(a.dual.values().data(), b.dual.values().data(), a.dual.values().size() * sizeof(double)), 0);
    const PartialLegendrePair c = partial_legendre(u, m), d = partial_legendre(u, m);
    EXPECT_EQ(std::memcmp(c.x1.values().data(), d.x1.values().data(), c.x1.values().size() * sizeof(double)), 0);
  }
}
