#pragma once

// Linearized Monge-Ampere operator L_u w = U^ij D_ij w in divergence form
// D_i(U^ij D_j w), and the singular right-hand sides of the Abreu equation.

#include <functional>
#include <stdexcept>

#include "abreu/geometry.hpp"
#include "abreu/sparse.hpp"

namespace abreu {

class NonConvexCoefficient : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularFlux : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Assembled L_u. Rows at nodes with a full 3x3 neighbourhood are flux rows:
/// face-averaged U11, U22 on the axis edges and the cell-centred U12 coupling
/// cell gradients, which makes that block symmetric. Rows next to the
/// boundary fall back to the Shortley-Weller nondivergence stencil.
struct LMAOperator {
  GridPtr grid;
  SymMatField U;          // nodal cofactor of the discrete Hessian
  CellField<double> U12;  // cell-centred off-diagonal cofactor entry
  DofMap dofs;
  SparseMatrix A;
  std::vector<bool> flux_row;  // per dof

  /// Boundary contribution of Dirichlet data psi (added to A w).
  Eigen::VectorXd boundary_shift(const PlaneFn& psi) const;
  /// (L_u w) at every inside node, with psi supplying the boundary values.
  ScalarField apply(const ScalarField& w, const PlaneFn& psi) const;
};

/// Builds L_u from a convex u. `bc` supplies u on the boundary for the
/// Hessian at boundary-adjacent nodes (one-sided differences when absent).
/// Throws NonConvexCoefficient when the discrete Hessian has an eigenvalue
/// below -1e-8 at an inside node.
LMAOperator assemble_lma(const ScalarField& u, const BoundaryFn& bc = std::nullopt);

/// Solves L_u w = f with w = psi on the boundary.
ScalarField solve_lma(const LMAOperator& op, const ScalarField& f, const PlaneFn& psi);

/// -div((|Du|^2 + delta)^((q-2)/2) Du). Nodes with four valid cells use the
/// cell-centred gradient and its adjoint divergence (the discrete Euler-Lagrange
/// operator of the cell-sum p-energy); other inside nodes use the expanded
/// nondivergence formula with the Shortley-Weller Hessian.
ScalarField qlap_rhs(const ScalarField& u, double q, double delta, const BoundaryFn& bc = std::nullopt);

/// Flux V = (|G|^2 + delta)^((q-2)/2) G for a gradient G.
Vec2 qlap_flux(const Vec2& G, double q, double delta);

using F0zFn = std::function<double(double x, double y, double z)>;

namespace f0z {
F0zFn zero();
/// c z + d.
F0zFn affine(double c, double d);
/// c z gamma(x, y).
F0zFn weighted(double c, PlaneFn gamma);
/// gamma(x, y): the z-derivative of F0 = z gamma (classic Rochet-Chone).
F0zFn density(PlaneFn gamma);
}  // namespace f0z

/// Pointwise F0_z(x, y, u(x, y)).
ScalarField f0z_term(const ScalarField& u, const F0zFn& F0z);

}  // namespace abreu
