#include "abreu/linearized_ma.hpp"

#include <cmath>
#include <utility>

namespace abreu {

namespace {

// Dirichlet placeholder used while assembling: Shortley-Weller weights do not
// depend on the boundary values, only the constants do.
const BoundaryFn kZeroBC = PlaneFn([](double, double) { return 0.0; });

int cell_index(const Grid2D& g, int i, int j) { return j * (g.nx() - 1) + i; }

bool four_cells_valid(const CellField<double>& cells, const Grid2D& g, int k) {
  const int i = g.ix(k), j = g.jy(k);
  if (i < 1 || j < 1 || i >= g.nx() - 1 || j >= g.ny() - 1) return false;
  return cells.valid[cell_index(g, i, j)] && cells.valid[cell_index(g, i - 1, j)] &&
         cells.valid[cell_index(g, i, j - 1)] && cells.valid[cell_index(g, i - 1, j - 1)];
}

void sw_row(const Grid2D& g, const SymMat& a, int k, const BoundaryFn& bc, const DofMap& dofs, int row,
            Triplets* trip, double* shift) {
  const std::array<std::pair<int, double>, 4> parts = {
      {{kE, a.a11}, {kN, a.a22}, {kNE, 0.5 * a.a12}, {kSE, -0.5 * a.a12}}};
  for (const auto& [d, c] : parts) {
    if (c == 0.0) continue;
    const Stencil s = second_difference_stencil(g, k, d, bc);
    if (trip)
      for (int t = 0; t < 3; ++t)
        if (s.node[t] >= 0) trip->emplace_back(row, dofs.dof(s.node[t]), c * s.w[t]);
    if (shift) *shift += c * s.constant;
  }
}

}  // namespace

LMAOperator assemble_lma(const ScalarField& u, const BoundaryFn& bc) {
  const GridPtr& grid = u.grid();
  const Grid2D& g = *grid;
  LMAOperator op{grid, SymMatField(grid), cell_mixed(u), DofMap(g), SparseMatrix(), {}};

  for (int k : g.inside_nodes()) {
    const SymMat H = hessian_at(u, k, bc);
    const double lo = H.eigenvalues()[0];
    if (lo < -1e-8)
      throw NonConvexCoefficient("linearized MA needs convex u; Hessian eigenvalue " + std::to_string(lo) +
                                 " at node " + std::to_string(k));
    op.U[k] = cofactor(H);
  }
  for (double& v : op.U12.v) v = -v;

  const double h2 = g.h() * g.h();
  const int n = op.dofs.size();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  op.flux_row.assign(n, false);
  for (int row = 0; row < n; ++row) {
    const int k = op.dofs.node(row);
    if (!(g.full_stencil(k) && four_cells_valid(op.U12, g, k))) {
      sw_row(g, op.U[k], k, kZeroBC, op.dofs, row, &trip, nullptr);
      continue;
    }
    op.flux_row[row] = true;
    // Axis fluxes with arithmetic face averages.
    for (int d : {kE, kW, kN, kS}) {
      const int nb = g.neighbor(k, d);
      const double c = (d == kE || d == kW) ? 0.5 * (op.U[k].a11 + op.U[nb].a11)
                                            : 0.5 * (op.U[k].a22 + op.U[nb].a22);
      trip.emplace_back(row, op.dofs.dof(nb), c / h2);
      trip.emplace_back(row, row, -c / h2);
    }
    // Cross fluxes: node divergence of U12_c (D2 w, D1 w)_c over the four cells.
    const int i = g.ix(k), j = g.jy(k);
    for (int ci = i - 1; ci <= i; ++ci)
      for (int cj = j - 1; cj <= j; ++cj) {
        const double c = op.U12.v[cell_index(g, ci, cj)];
        const double sx = (ci == i) ? 1.0 : -1.0;  // side of the cell in x
        const double sy = (cj == j) ? 1.0 : -1.0;
        // (D1 w)_c and (D2 w)_c in terms of the corners (a, b) in {0,1}^2.
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const int corner = g.index(ci + a, cj + b);
            const double d1 = (a ? 0.5 : -0.5) / g.h();
            const double d2 = (b ? 0.5 : -0.5) / g.h();
            // div contribution: sx/(2h) * U12 (D2 w)_c + sy/(2h) * U12 (D1 w)_c
            const double wgt = c * (sx * d2 + sy * d1) / (2.0 * g.h());
            trip.emplace_back(row, op.dofs.dof(corner), wgt);
          }
      }
  }
  op.A.resize(n, n);
  op.A.setFromTriplets(trip.begin(), trip.end());
  op.A.prune(0.0);
  return op;
}

Eigen::VectorXd LMAOperator::boundary_shift(const PlaneFn& psi) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dofs.size());
  const BoundaryFn bc = psi;
  for (int row = 0; row < dofs.size(); ++row)
    if (!flux_row[row]) sw_row(*grid, U[dofs.node(row)], dofs.node(row), bc, dofs, row, nullptr, &s[row]);
  return s;
}

ScalarField LMAOperator::apply(const ScalarField& w, const PlaneFn& psi) const {
  Eigen::VectorXd x(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) x[d] = w[dofs.node(d)];
  const Eigen::VectorXd y = A * x + boundary_shift(psi);
  ScalarField out(grid);
  for (int d = 0; d < dofs.size(); ++d) out[dofs.node(d)] = y[d];
  return out;
}

ScalarField solve_lma(const LMAOperator& op, const ScalarField& f, const PlaneFn& psi) {
  const Eigen::VectorXd shift = op.boundary_shift(psi);
  Eigen::VectorXd b(op.dofs.size());
  for (int d = 0; d < op.dofs.size(); ++d) b[d] = f[op.dofs.node(d)] - shift[d];
  const Eigen::VectorXd x = sparse_solve(op.A, b);
  ScalarField w(op.grid);
  for (int d = 0; d < op.dofs.size(); ++d) w[op.dofs.node(d)] = x[d];
  return w;
}

Vec2 qlap_flux(const Vec2& G, double q, double delta) {
  const double s = G.x * G.x + G.y * G.y + delta;
  if (q < 2.0 && s < 1e-28) throw SingularFlux("q < 2 flux is singular at a vanishing gradient; use delta > 0");
  const double a = std::pow(s, 0.5 * (q - 2.0));
  return {a * G.x, a * G.y};
}

ScalarField qlap_rhs(const ScalarField& u, double q, double delta, const BoundaryFn& bc) {
  if (!(q > 1.0)) throw std::invalid_argument("qlap_rhs needs q > 1");
  if (delta < 0.0) throw std::invalid_argument("qlap_rhs needs delta >= 0");
  const GridPtr& grid = u.grid();
  const Grid2D& g = *grid;
  const CellField<Vec2> G = cell_gradient(u);
  CellField<Vec2> V = G;
  for (std::size_t c = 0; c < G.v.size(); ++c)
    if (G.valid[c]) V.v[c] = qlap_flux(G.v[c], q, delta);
  const ScalarField div = cell_divergence(V);

  CellField<double> mask{grid, std::vector<double>(G.v.size(), 0.0), G.valid};
  const VectorField Du = gradient(u, bc);
  ScalarField out(grid);
  for (int k : g.inside_nodes()) {
    if (four_cells_valid(mask, g, k)) {
      out[k] = -div[k];
      continue;
    }
    const Vec2 p = Du[k];
    const SymMat H = hessian_at(u, k, bc);
    const double s = p.x * p.x + p.y * p.y + delta;
    if (q < 2.0 && s < 1e-28) throw SingularFlux("q < 2 flux is singular at a vanishing gradient; use delta > 0");
    const double pHp = H.a11 * p.x * p.x + 2.0 * H.a12 * p.x * p.y + H.a22 * p.y * p.y;
    const double a = std::pow(s, 0.5 * (q - 2.0));
    const double b = (q == 2.0 || pHp == 0.0) ? 0.0 : (q - 2.0) * pHp / s;
    out[k] = -a * (H.trace() + b);
  }
  return out;
}

namespace f0z {
F0zFn zero() {
  return [](double, double, double) { return 0.0; };
}
F0zFn affine(double c, double d) {
  return [c, d](double, double, double z) { return c * z + d; };
}
F0zFn weighted(double c, PlaneFn gamma) {
  return [c, gamma = std::move(gamma)](double x, double y, double z) { return c * z * gamma(x, y); };
}
F0zFn density(PlaneFn gamma) {
  return [gamma = std::move(gamma)](double x, double y, double) { return gamma(x, y); };
}
}  // namespace f0z

ScalarField f0z_term(const ScalarField& u, const F0zFn& F0z) {
  const Grid2D& g = *u.grid();
  ScalarField out(u.grid());
  for (int k : g.inside_nodes()) out[k] = F0z(g.x(g.ix(k)), g.y(g.jy(k)), u[k]);
  return out;
}

}  // namespace abreu
