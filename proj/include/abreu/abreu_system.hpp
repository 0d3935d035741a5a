#pragma once

// Coupled second boundary value problem
//   scale_eps * U^ij D_ij w = -div((|Du|^2 + delta)^((q-2)/2) Du) + F0_z(x, u),
//   w = 1 / det D^2 u,   u = phi, w = psi on the boundary.

#include <functional>
#include <stdexcept>
#include <string>

#include "abreu/geometry.hpp"
#include "abreu/linearized_ma.hpp"
#include "abreu/monge_ampere.hpp"
#include "abreu/report.hpp"

namespace abreu {

struct AbreuProblem {
  ConvexDomain domain = ConvexDomain::disk();
  double q = 2.0;
  double delta = 0.0;
  PlaneFn phi;
  PlaneFn psi;
  F0zFn F0z = f0z::zero();
  double scale_eps = 1.0;
};

/// Throws std::invalid_argument when the problem violates its invariants
/// (q > 1, delta >= 0 and > 0 for q < 2, scale_eps > 0, psi > 0 on the
/// sampled boundary of `grid`).
void validate(const AbreuProblem& p, const Grid2D& grid);

/// Right-hand side of the w-equation as a function of u (before division by
/// scale_eps). The Abreu and Rochet-Chone problems differ only here.
using RhsFn = std::function<ScalarField(const ScalarField& u)>;

/// qlap_rhs(u) + F0_z(x, u).
RhsFn abreu_rhs(const AbreuProblem& p);

/// The problem reduced to what the coupled solvers need.
struct CoupledSystem {
  GridPtr grid;
  PlaneFn phi;
  PlaneFn psi;
  double scale_eps = 1.0;
  RhsFn rhs;
};

enum class Coupling { kPicard, kNewton };

struct AbreuOptions {
  double tol = 1e-7;
  int max_outer = 200;
  double tau = 0.5;
  int stall_window = 25;
  Coupling coupling = Coupling::kPicard;
  MAOptions ma;
};

/// Defaults with Newton coupling.
AbreuOptions newton_options();

struct AbreuSolution {
  ScalarField u;
  ScalarField w;
  SolveReport report;
};

/// Picard: w from the LMA solve at the current u, floored at 1e-6 inf psi;
/// u from the MA solve with g = 1/w; both under-relaxed by tau, halved while
/// the fixed-point defect would grow. Newton: damped Newton on the joint
/// residual with the u-derivative of the w-equation by coloured finite
/// differences. Both start from the MA solve with g = 1/mean(psi). A converged
/// Picard run is polished by up to 10 Newton steps so that the equation
/// residuals, not only the fixed-point defect, meet the tolerance.
/// residual_history holds Picard defects (|u - T u|, |w - T w|) or, for Newton,
/// (scale_eps |r1|, |r2|). `initial` (optional, same grid) replaces the
/// starting pair.
AbreuSolution solve_coupled(const CoupledSystem& sys, const AbreuOptions& opts = {},
                            const AbreuSolution* initial = nullptr);

AbreuSolution solve_sbvp(const AbreuProblem& p, int n, const AbreuOptions& opts = {});
AbreuSolution solve_sbvp(const AbreuProblem& p, const GridPtr& grid, const AbreuOptions& opts = {});

struct AbreuResidual {
  ScalarField r1;  // scale_eps L_u w - rhs(u)
  ScalarField r2;  // w det+ D^2 u - 1
};

AbreuResidual coupled_residual(const ScalarField& u, const ScalarField& w, const CoupledSystem& sys,
                               double clamp = MAOptions{}.clamp);
AbreuResidual abreu_residual(const ScalarField& u, const ScalarField& w, const AbreuProblem& p);

/// A priori quantities of a solution. The gradient bound
/// |Du(x)| <= (max_boundary phi - u(x)) / dist(x, boundary) is checked at
/// INTERIOR nodes with dist bounded below by |rho(x)| / sup |grad rho|.
AprioriChecks apriori_check(const ScalarField& u, const ScalarField& w, const PlaneFn& phi, const PlaneFn& psi);

/// Infimum of f over the Shortley-Weller crossing points of the grid.
double boundary_inf(const Grid2D& grid, const PlaneFn& f);
double boundary_sup(const Grid2D& grid, const PlaneFn& f);

/// Manufactured instance with exact solution u* = exp(r^2/2),
/// w* = exp(-r^2)/(1 + r^2): F0_z carries the source L_{u*} w* + div(a Du*).
struct Manufactured {
  AbreuProblem problem;
  PlaneFn u_exact;
  PlaneFn w_exact;
};
Manufactured manufactured_exponential(const ConvexDomain& domain, double q, double delta);

}  // namespace abreu
