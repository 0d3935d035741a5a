#pragma once

// Rochet-Chone problems with q-power cost: the penalised Abreu approximation
//   eps U^ij D_ij w = f_eps,  w = 1/det D^2u,  u = phi, w = psi on the boundary,
// its energy J_{q,eps}, a convexity-constrained minimiser used as an oracle,
// and the eps sweep.

#include <string>
#include <vector>

#include "abreu/abreu_system.hpp"
#include "abreu/geometry.hpp"
#include "abreu/linearized_ma.hpp"

namespace abreu {

/// Lower-order term F0(x, y, z) with its z-derivative.
struct F0Term {
  F0zFn value;
  F0zFn dz;
  std::string name;
};

namespace f0 {
/// z gamma(x): the classic Rochet-Chone term.
F0Term linear(const PlaneFn& gamma);
F0Term none();
/// c z^2.
F0Term quadratic(double c);
/// (z - target(x))^2, whose pointwise minimiser is the target.
F0Term tracking(const PlaneFn& target);
}  // namespace f0

struct RCProblem {
  /// Must carry an inner region Omega_0.
  ConvexDomain domain = ConvexDomain::disk(2.0, 1.5, 1.5).with_inner_box(1.0, 2.0, 1.0, 2.0);
  double q = 2.0;
  PlaneFn gamma;
  PlaneFn phi;
  PlaneFn psi;
  F0Term F0;
};

/// Omega = disk of radius 2 about (1.5, 1.5), Omega_0 = [1,2]^2, gamma = 1,
/// phi = 0, psi = 1, F0 = z gamma.
RCProblem classic_rc(double q = 2.0);

/// Throws std::invalid_argument unless: an inner region compactly contained in
/// Omega, q > 1, phi discretely convex on `grid`, gamma >= 0 and constant when
/// q > 2, F0_z nondecreasing in z on samples, psi > 0 on the boundary.
void validate(const RCProblem& p, const Grid2D& grid);

/// utilde = phi + eps^(1/12) (e^rho - 1) as a function of position.
PlaneFn utilde_fn(const RCProblem& p, double eps);
/// utilde at every inside node.
ScalarField lift_utilde(const RCProblem& p, const GridPtr& grid, double eps);

/// Nodes in Omega_0 (inner_rho < 0).
std::vector<bool> omega0_nodes(const Grid2D& grid);

/// f_eps: minus the node divergence of the cell flux
/// gamma(x) [(|Du|^2 + eps)^((q-2)/2) Du - x] over Omega_0 cells (zero on other
/// cells), plus the corner share F0_z/4 of every adjacent Omega_0 cell, plus
/// (u - utilde)/eps at inside nodes outside Omega_0. It is exactly the
/// gradient of the non-log part of jqe_energy divided by the node weight h^2.
ScalarField rc_rhs(const ScalarField& u, const RCProblem& p, double eps);

struct JqeEnergy {
  double total = 0.0;
  double flux = 0.0;     // Omega_0 gradient term (cell quadrature)
  double lower = 0.0;    // Omega_0 F0 term (cell midpoint, z = corner mean)
  double logdet = 0.0;   // -eps sum h^2 log det+ D^2u
  double penalty = 0.0;  // (1/2eps) sum over Omega \ Omega_0 of h^2 (u - utilde)^2
  bool floor_active = false;
};

/// det+ is floored at 1e-14 inside the log; floor_active reports it.
JqeEnergy jqe_energy(const ScalarField& u, const RCProblem& p, double eps);

/// Gradient of the logdet addend divided by h^2: -eps (dDet/du)^T w with
/// w = 1/det+, at the Dirichlet unknowns.
ScalarField logdet_gradient(const ScalarField& u, const RCProblem& p, double eps);

/// Hessian in p of gamma (|p|^2 + eps)^(q/2)/q.
SymMat rc_flux_hessian(Vec2 p, double q, double eps, double gamma);

struct RCApproxRun {
  double eps = 0.0;
  ScalarField u;
  ScalarField w;
  double penalty_l2 = 0.0;  // integral over Omega \ Omega_0 of (u - utilde)^2
  JqeEnergy energy;
  SolveReport report;
};

/// Coupled solve with scale_eps = delta = eps and the right-hand side rc_rhs
/// re-evaluated at every iterate. Newton coupling by default. `initial`
/// (optional) warm-starts from an earlier run on the same grid. When the
/// direct solve fails, it continues from `initial` in geometric eps steps,
/// or without `initial` scales the right-hand side from 0 to 1; the report
/// message names the continuation used.
RCApproxRun solve_rc_approx(const RCProblem& p, double eps, const GridPtr& grid, AbreuOptions opts = newton_options(),
                            const RCApproxRun* initial = nullptr);
RCApproxRun solve_rc_approx(const RCProblem& p, double eps, int n, AbreuOptions opts = newton_options());

struct OracleOptions {
  int iters = 400;
  int sweeps = 50;
  /// Final projection continues until the largest violation is below this.
  double feas_tol = 1e-8;
  int max_final_sweeps = 20000;
};

struct OracleResult {
  ScalarField u;
  double objective = 0.0;
  std::vector<double> history;  // objective per accepted iterate
  double max_violation = 0.0;
  int iterations = 0;
};

/// The objective of the oracle: the Omega_0 part of J with eps = 0.
double rc_objective(const ScalarField& u, const RCProblem& p);

/// Projected gradient descent over u with u = phi at every node outside
/// Omega_0 and nonnegative axis and diagonal second differences wherever the
/// three nodes are inside; projection by cyclic Dykstra sweeps, backtracking step.
/// Throws std::invalid_argument when phi violates the constraints (by more
/// than 1e-12) or n_coarse > 33.
OracleResult oracle_minimize(const RCProblem& p, int n_coarse, const OracleOptions& opts = {});
OracleResult oracle_minimize(const RCProblem& p, const GridPtr& grid, const OracleOptions& opts = {});

/// Largest violation of the oracle's convexity cone.
double cone_violation(const ScalarField& u);

struct SweepRow {
  double eps = 0.0;
  double dist_oracle = 0.0;
  double penalty_l2 = 0.0;
  double energy = 0.0;
  int outer_iters = 0;
  bool converged = false;
  std::string message;
};

struct ConvergenceTable {
  std::vector<SweepRow> rows;
  /// One per row; failed rows whose solve threw hold an empty run.
  std::vector<RCApproxRun> runs;
  OracleResult oracle;
  double oracle_objective = 0.0;
};

/// One solve per eps (strictly decreasing). With jobs == 1 each row is
/// warm-started from the previous converged row; with jobs > 1 rows are
/// independent cold solves on up to `jobs` threads, merged in eps order.
/// dist_oracle is the sup distance to the oracle on the Omega_0 nodes whose
/// 5x5 neighbourhood lies in Omega_0. The oracle runs on the same grid
/// (n <= 33 required).
ConvergenceTable epsilon_sweep(const RCProblem& p, const std::vector<double>& eps_list, int n,
                               const AbreuOptions& opts = newton_options(), const OracleOptions& oracle = {},
                               int jobs = 1);

}  // namespace abreu
