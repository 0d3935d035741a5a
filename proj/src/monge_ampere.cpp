#include "abreu/monge_ampere.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace abreu {

void validate(const MAOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("MAOptions.tol must be positive");
  if (opts.max_newton < 1) throw std::invalid_argument("MAOptions.max_newton must be >= 1");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("MAOptions.damping must lie in (0, 1]");
  if (!(opts.clamp >= 0.0)) throw std::invalid_argument("MAOptions.clamp must be >= 0");
}

double clamped_det(const SymMat& H, double clamp) {
  const auto ev = H.eigenvalues();
  if (ev[0] >= clamp) return H.det();
  return std::max(ev[0], clamp) * std::max(ev[1], clamp);
}

SymMat clamped_cofactor(const SymMat& H, double clamp) {
  const auto ev = H.eigenvalues();
  if (ev[0] >= clamp) return cofactor(H);
  const double l0 = std::max(ev[0], clamp), l1 = std::max(ev[1], clamp);
  const Vec2 v0 = H.eigenvector(ev[0]);
  // H+ = l0 v0 v0^T + l1 v1 v1^T with v1 = v0 rotated by 90 degrees.
  const SymMat Hp{l0 * v0.x * v0.x + l1 * v0.y * v0.y, (l0 - l1) * v0.x * v0.y,
                  l0 * v0.y * v0.y + l1 * v0.x * v0.x};
  return cofactor(Hp);
}

ScalarField ma_residual(const ScalarField& u, const ScalarField& g, const PlaneFn& phi, double clamp) {
  ScalarField r(u.grid());
  const BoundaryFn bc = phi;
  for (int k : u.grid()->inside_nodes()) r[k] = clamped_det(hessian_at(u, k, bc), clamp) - g[k];
  return r;
}

SparseMatrix nondivergence_matrix(const Grid2D& grid, const SymMatField& A, const BoundaryFn& bc,
                                  const DofMap& dofs, Eigen::VectorXd* rhs_shift) {
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(dofs.size()) * 12);
  if (rhs_shift) rhs_shift->setZero(dofs.size());
  for (int row = 0; row < dofs.size(); ++row) {
    const int k = dofs.node(row);
    const SymMat& a = A[k];
    const std::array<std::pair<int, double>, 4> parts = {
        {{kE, a.a11}, {kN, a.a22}, {kNE, 0.5 * a.a12}, {kSE, -0.5 * a.a12}}};
    for (const auto& [d, c] : parts) {
      if (c == 0.0) continue;
      const Stencil s = second_difference_stencil(grid, k, d, bc);
      for (int t = 0; t < 3; ++t)
        if (s.node[t] >= 0) trip.emplace_back(row, dofs.dof(s.node[t]), c * s.w[t]);
      if (rhs_shift) (*rhs_shift)[row] += c * s.constant;
    }
  }
  SparseMatrix M(dofs.size(), dofs.size());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SparseMatrix ma_jacobian(const ScalarField& u, const PlaneFn& phi, double clamp, const DofMap& dofs) {
  const BoundaryFn bc = phi;
  SymMatField M(u.grid());
  for (int k : u.grid()->inside_nodes()) M[k] = clamped_cofactor(hessian_at(u, k, bc), clamp);
  return nondivergence_matrix(*u.grid(), M, bc, dofs, nullptr);
}

NewtonStep newton_step(const ScalarField& u, const ScalarField& g, const PlaneFn& phi, double clamp) {
  const Grid2D& grid = *u.grid();
  const DofMap dofs(grid);
  const ScalarField r = ma_residual(u, g, phi, clamp);
  Eigen::VectorXd rhs(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) rhs[d] = -r[dofs.node(d)];
  const Eigen::VectorXd x = sparse_solve(ma_jacobian(u, phi, clamp, dofs), rhs);
  NewtonStep step{ScalarField(u.grid(), 0.0), sup_norm(r)};
  for (int d = 0; d < dofs.size(); ++d) step.delta[dofs.node(d)] = x[d];
  return step;
}

ScalarField poisson_solve(const GridPtr& grid, const ScalarField& rhs, const PlaneFn& phi) {
  const DofMap dofs(*grid);
  const SymMatField I(grid, SymMat{1.0, 0.0, 1.0});
  Eigen::VectorXd shift;
  const SparseMatrix L = nondivergence_matrix(*grid, I, BoundaryFn(phi), dofs, &shift);
  Eigen::VectorXd b(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) b[d] = rhs[dofs.node(d)] - shift[d];
  const Eigen::VectorXd x = sparse_solve(L, b);
  ScalarField u(grid);
  for (int d = 0; d < dofs.size(); ++d) u[dofs.node(d)] = x[d];
  return u;
}

namespace {

bool strictly_convex(const ScalarField& u, const PlaneFn& phi, double clamp) {
  const BoundaryFn bc = phi;
  for (int k : u.grid()->inside_nodes())
    if (hessian_at(u, k, bc).eigenvalues()[0] <= std::max(clamp, 1e-8)) return false;
  return true;
}

// Newton linearised at a non-convex iterate has no useful direction (the
// clamped residual is flat there). Sweep the 2D fixed point
// Laplace u+ = sqrt((Laplace u)^2 + 2 (g - det D^2 u)) until the iterate is
// strictly convex at every inside node.
void convexify(ScalarField& u, const ScalarField& g, const PlaneFn& phi, double clamp) {
  const BoundaryFn bc = phi;
  for (int sweep = 0; sweep < 200 && !strictly_convex(u, phi, clamp); ++sweep) {
    ScalarField rhs(u.grid());
    for (int k : u.grid()->inside_nodes()) {
      const SymMat H = hessian_at(u, k, bc);
      rhs[k] = std::sqrt(std::max(0.0, H.trace() * H.trace() + 2.0 * (g[k] - H.det())));
    }
    u = poisson_solve(u.grid(), rhs, phi);
  }
}

}  // namespace

MAResult solve_ma(const GridPtr& grid, const ScalarField& g, const PlaneFn& phi, const MAOptions& opts,
                  const ScalarField* initial) {
  validate(opts);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k : grid->inside_nodes())
    if (!(g[k] > 0.0)) throw NonPositiveRHS("Monge-Ampere right-hand side must be positive");

  MAResult out;
  if (initial) {
    out.u = *initial;
  } else {
    ScalarField lift(grid);
    for (int k : grid->inside_nodes()) lift[k] = 2.0 * std::sqrt(g[k]);
    out.u = poisson_solve(grid, lift, phi);
  }
  SolveReport& rep = out.report;
  const DofMap dofs(*grid);
  convexify(out.u, g, phi, opts.clamp);
  ScalarField r = ma_residual(out.u, g, phi, opts.clamp);
  double norm = sup_norm(r);
  rep.residual_history.push_back({norm, 0.0});
  double smallest_step = 1.0;

  for (int it = 0; it < opts.max_newton && norm > opts.tol; ++it) {
    Eigen::VectorXd rhs(dofs.size());
    for (int d = 0; d < dofs.size(); ++d) rhs[d] = -r[dofs.node(d)];
    const Eigen::VectorXd delta = sparse_solve(ma_jacobian(out.u, phi, opts.clamp, dofs), rhs);

    double tau = opts.damping;
    bool accepted = false;
    while (tau >= 1e-6) {
      ScalarField trial = out.u;
      for (int d = 0; d < dofs.size(); ++d) trial[dofs.node(d)] += tau * delta[d];
      ScalarField rt = ma_residual(trial, g, phi, opts.clamp);
      const double nt = sup_norm(rt);
      if (nt <= (1.0 - 1e-4 * tau) * norm) {
        out.u = std::move(trial);
        r = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      rep.message = "NewtonStall: backtracking step fell below 1e-6";
      break;
    }
    smallest_step = std::min(smallest_step, tau);
    rep.outer_iters = it + 1;
    rep.residual_history.push_back({norm, 0.0});
  }
  rep.converged = norm <= opts.tol;
  rep.damping_used = smallest_step;
  if (!rep.converged && rep.message.empty())
    rep.message = "max_newton reached with residual " + std::to_string(norm);
  rep.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ConvexityCheck assert_convex(const ScalarField& u, const BoundaryFn& bc) {
  ConvexityCheck c;
  c.min_eig = std::numeric_limits<double>::infinity();
  for (int k : u.grid()->inside_nodes()) {
    if (u.grid()->node_class(k) != NodeClass::kInterior) continue;
    c.min_eig = std::min(c.min_eig, hessian_at(u, k, bc).eigenvalues()[0]);
  }
  c.ok = c.min_eig >= -1e-8;
  return c;
}

}  // namespace abreu
