#pragma once

// Dirichlet Monge-Ampere solver: det D^2 u = g in Omega, u = phi on the boundary,
// by damped Newton on the 9-point discrete Hessian with an eigenvalue-clamped
// determinant.

#include <stdexcept>

#include "abreu/geometry.hpp"
#include "abreu/report.hpp"
#include "abreu/sparse.hpp"

namespace abreu {

class NonPositiveRHS : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MAOptions {
  double tol = 1e-8;
  int max_newton = 100;
  double damping = 1.0;
  double clamp = 1e-10;
};

void validate(const MAOptions& opts);

/// det of D^2 with eigenvalues floored at `clamp`.
double clamped_det(const SymMat& H, double clamp);
/// Cofactor of the clamped Hessian; equals cofactor(H) when no eigenvalue is
/// below the floor. Used as the Newton linearisation.
SymMat clamped_cofactor(const SymMat& H, double clamp);

/// Pointwise det+ D^2 u - g at every inside node.
ScalarField ma_residual(const ScalarField& u, const ScalarField& g, const PlaneFn& phi, double clamp);

/// Jacobian of ma_residual with respect to the inside-node values of u.
SparseMatrix ma_jacobian(const ScalarField& u, const PlaneFn& phi, double clamp, const DofMap& dofs);

/// Matrix of the Shortley-Weller operator sum_ij A^ij D_ij acting on nodal
/// unknowns (A given per node); the boundary contribution of `bc` is added to
/// `rhs_shift` (so that A:D^2 w = M w + rhs_shift).
SparseMatrix nondivergence_matrix(const Grid2D& grid, const SymMatField& A, const BoundaryFn& bc,
                                  const DofMap& dofs, Eigen::VectorXd* rhs_shift);

struct NewtonStep {
  ScalarField delta;
  double residual_norm = 0.0;
};

/// One undamped Newton correction: U^ij(u) D_ij delta = g - det+ D^2 u with
/// delta = 0 on the boundary.
NewtonStep newton_step(const ScalarField& u, const ScalarField& g, const PlaneFn& phi,
                       double clamp = MAOptions{}.clamp);

struct MAResult {
  ScalarField u;
  SolveReport report;
};

/// Poisson lift: Laplace u = rhs, u = phi on the boundary.
ScalarField poisson_solve(const GridPtr& grid, const ScalarField& rhs, const PlaneFn& phi);

/// Damped Newton solve. Starts from `initial` when given, else from the
/// Poisson problem Laplace u = 2 sqrt(g). A start that is not strictly convex
/// is first swept with the fixed point Laplace u+ = sqrt((Laplace u)^2 + 2(g - det)). A stall (step below 1e-6) returns the
/// best iterate with report.converged = false.
MAResult solve_ma(const GridPtr& grid, const ScalarField& g, const PlaneFn& phi,
                  const MAOptions& opts = {}, const ScalarField* initial = nullptr);

struct ConvexityCheck {
  bool ok = false;
  double min_eig = 0.0;
};

/// Smallest Hessian eigenvalue over INTERIOR nodes; ok iff >= -1e-8.
ConvexityCheck assert_convex(const ScalarField& u, const BoundaryFn& bc = std::nullopt);

}  // namespace abreu
