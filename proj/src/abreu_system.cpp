#include "abreu/abreu_system.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace abreu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (int k : a.grid()->inside_nodes()) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

ScalarField blend(const ScalarField& a, const ScalarField& b, double tau) {
  ScalarField out = a;
  for (int k : a.grid()->inside_nodes()) out[k] = (1.0 - tau) * a[k] + tau * b[k];
  return out;
}

double boundary_mean(const Grid2D& g, const PlaneFn& f) {
  double s = 0.0;
  int count = 0;
  for (int k : g.inside_nodes())
    for (int d = 0; d < 8; ++d)
      if (g.crosses(k, d)) {
        const auto p = g.crossing_point(k, d);
        s += f(p[0], p[1]);
        ++count;
      }
  if (count == 0) throw GeometryError("grid has no boundary crossings");
  return s / count;
}

ScalarField inverse_det(const ScalarField& u, const PlaneFn& phi, double clamp) {
  ScalarField w(u.grid());
  const BoundaryFn bc = phi;
  for (int k : u.grid()->inside_nodes()) w[k] = 1.0 / clamped_det(hessian_at(u, k, bc), clamp);
  return w;
}

ScalarField solve_w(const CoupledSystem& sys, const ScalarField& u) {
  const LMAOperator op = assemble_lma(u, sys.phi);
  ScalarField f = sys.rhs(u);
  for (int k : sys.grid->inside_nodes()) f[k] /= sys.scale_eps;
  return solve_lma(op, f, sys.psi);
}

struct PicardImage {
  ScalarField u, w;
  bool floored = false;
  bool ok = true;
  std::string note;
};

PicardImage picard_map(const CoupledSystem& sys, const ScalarField& u, double w_floor, const MAOptions& ma) {
  PicardImage img;
  img.w = solve_w(sys, u);
  ScalarField g(sys.grid);
  for (int k : sys.grid->inside_nodes()) {
    if (img.w[k] < w_floor) {
      img.w[k] = w_floor;
      img.floored = true;
    }
    g[k] = 1.0 / img.w[k];
  }
  MAResult ma_res = solve_ma(sys.grid, g, sys.phi, ma, &u);
  img.ok = ma_res.report.converged;
  if (!img.ok) img.note = "inner MA solve failed: " + ma_res.report.message;
  img.u = std::move(ma_res.u);
  return img;
}

double joint_defect(const ScalarField& u, const ScalarField& w, const PicardImage& img) {
  return std::max(sup_diff(u, img.u), sup_diff(w, img.w));
}

// Stacked unknowns [u dofs; w dofs].
Eigen::VectorXd stack(const ScalarField& a, const ScalarField& b, const DofMap& dofs) {
  const int n = dofs.size();
  Eigen::VectorXd z(2 * n);
  for (int d = 0; d < n; ++d) {
    z[d] = a[dofs.node(d)];
    z[n + d] = b[dofs.node(d)];
  }
  return z;
}

// Jacobian of (r1, r2) with respect to (u, w). The u-block of r1 is built by
// central differences with a 5x5 colouring: every row of r1 depends on u
// within Chebyshev distance 2 of its node.
SparseMatrix coupled_jacobian(const ScalarField& u, const ScalarField& w, const CoupledSystem& sys,
                              double clamp, const DofMap& dofs) {
  const Grid2D& g = *sys.grid;
  const int n = dofs.size();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(n) * 40);

  constexpr int kColors = 5;
  const double eps = 1e-6;
  for (int a = 0; a < kColors; ++a)
    for (int b = 0; b < kColors; ++b) {
      ScalarField up = u, um = u;
      bool any = false;
      for (int d = 0; d < n; ++d) {
        const int k = dofs.node(d);
        if (g.ix(k) % kColors == a && g.jy(k) % kColors == b) {
          up[k] += eps;
          um[k] -= eps;
          any = true;
        }
      }
      if (!any) continue;
      const ScalarField rp = coupled_residual(up, w, sys, clamp).r1;
      const ScalarField rm = coupled_residual(um, w, sys, clamp).r1;
      for (int row = 0; row < n; ++row) {
        const int k = dofs.node(row);
        const int i = g.ix(k), j = g.jy(k);
        // The unique coloured column within distance 2.
        const int ci = i - 2 + ((a - (i - 2)) % kColors + kColors) % kColors;
        const int cj = j - 2 + ((b - (j - 2)) % kColors + kColors) % kColors;
        if (ci < 0 || cj < 0 || ci >= g.nx() || cj >= g.ny()) continue;
        const int col = dofs.dof(g.index(ci, cj));
        if (col < 0) continue;
        const double v = (rp[k] - rm[k]) / (2.0 * eps);
        if (v != 0.0) trip.emplace_back(row, col, v);
      }
    }

  const LMAOperator op = assemble_lma(u, sys.phi);
  for (int c = 0; c < op.A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(op.A, c); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), n + c, sys.scale_eps * it.value());

  const SparseMatrix M = ma_jacobian(u, sys.phi, clamp, dofs);
  const BoundaryFn bc = sys.phi;
  for (int c = 0; c < M.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(M, c); it; ++it) {
      const int row = static_cast<int>(it.row());
      trip.emplace_back(n + row, c, w[dofs.node(row)] * it.value());
    }
  for (int d = 0; d < n; ++d)
    trip.emplace_back(n + d, n + d, clamped_det(hessian_at(u, dofs.node(d), bc), clamp));

  SparseMatrix J(2 * n, 2 * n);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

struct Merit {
  double r1 = 0.0, r2 = 0.0;
};

Merit merit(const AbreuResidual& r) { return {sup_norm(r.r1), sup_norm(r.r2)}; }

// Damped Newton on the joint residual. Returns true when both residuals are
// within tolerance.
bool newton_phase(ScalarField& u, ScalarField& w, const CoupledSystem& sys, const AbreuOptions& opts,
                  int max_iters, bool record, SolveReport& rep) {
  const DofMap dofs(*sys.grid);
  const int n = dofs.size();
  const double clamp = opts.ma.clamp;
  const double tol1 = opts.tol / sys.scale_eps, tol2 = opts.tol;
  Merit m = merit(coupled_residual(u, w, sys, clamp));
  const auto scaled = [&](const Merit& x) { return std::max(x.r1 / tol1, x.r2 / tol2); };
  for (int it = 0; it < max_iters; ++it) {
    if (m.r1 <= tol1 && m.r2 <= tol2) return true;
    const AbreuResidual r = coupled_residual(u, w, sys, clamp);
    const Eigen::VectorXd z = -stack(r.r1, r.r2, dofs);
    const Eigen::VectorXd step = sparse_solve(coupled_jacobian(u, w, sys, clamp, dofs), z);
    double t = 1.0;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      ScalarField ut = u, wt = w;
      for (int d = 0; d < n; ++d) {
        ut[dofs.node(d)] += t * step[d];
        wt[dofs.node(d)] += t * step[n + d];
      }
      Merit mt;
      try {
        mt = merit(coupled_residual(ut, wt, sys, clamp));
      } catch (const NonConvexCoefficient&) {
        t *= 0.5;  // the trial left the convex cone
        continue;
      }
      if (scaled(mt) <= (1.0 - 1e-4 * t) * scaled(m)) {
        u = std::move(ut);
        w = std::move(wt);
        m = mt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (record) {
      rep.outer_iters += 1;
      rep.residual_history.push_back({m.r1 * sys.scale_eps, m.r2});
    }
    if (!accepted) {
      rep.message = "NewtonStall: coupled line search failed";
      return false;
    }
    rep.damping_used = std::min(rep.damping_used, t);
  }
  return m.r1 <= tol1 && m.r2 <= tol2;
}

}  // namespace

double boundary_inf(const Grid2D& grid, const PlaneFn& f) {
  double m = kInf;
  for (int k : grid.inside_nodes())
    for (int d = 0; d < 8; ++d)
      if (grid.crosses(k, d)) {
        const auto p = grid.crossing_point(k, d);
        m = std::min(m, f(p[0], p[1]));
      }
  return m;
}

double boundary_sup(const Grid2D& grid, const PlaneFn& f) {
  return -boundary_inf(grid, [&f](double x, double y) { return -f(x, y); });
}

void validate(const AbreuProblem& p, const Grid2D& grid) {
  if (!(p.q > 1.0)) throw std::invalid_argument("q must exceed 1");
  if (p.delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
  if (p.q < 2.0 && !(p.delta > 0.0)) throw std::invalid_argument("delta must be positive for q<2");
  if (!(p.scale_eps > 0.0)) throw std::invalid_argument("scale_eps must be positive");
  if (!p.phi || !p.psi || !p.F0z) throw std::invalid_argument("phi, psi and F0z must be set");
  if (!(boundary_inf(grid, p.psi) > 0.0)) throw std::invalid_argument("psi must be positive on the boundary");
}

RhsFn abreu_rhs(const AbreuProblem& p) {
  return [p](const ScalarField& u) {
    ScalarField f = qlap_rhs(u, p.q, p.delta, p.phi);
    const ScalarField z = f0z_term(u, p.F0z);
    for (int k : u.grid()->inside_nodes()) f[k] += z[k];
    return f;
  };
}

AbreuResidual coupled_residual(const ScalarField& u, const ScalarField& w, const CoupledSystem& sys,
                               double clamp) {
  const LMAOperator op = assemble_lma(u, sys.phi);
  AbreuResidual r{op.apply(w, sys.psi), ScalarField(sys.grid)};
  const ScalarField f = sys.rhs(u);
  const BoundaryFn bc = sys.phi;
  for (int k : sys.grid->inside_nodes()) {
    r.r1[k] = sys.scale_eps * r.r1[k] - f[k];
    r.r2[k] = w[k] * clamped_det(hessian_at(u, k, bc), clamp) - 1.0;
  }
  return r;
}

AbreuResidual abreu_residual(const ScalarField& u, const ScalarField& w, const AbreuProblem& p) {
  return coupled_residual(u, w, CoupledSystem{u.grid(), p.phi, p.psi, p.scale_eps, abreu_rhs(p)});
}

AbreuOptions newton_options() {
  AbreuOptions o;
  o.coupling = Coupling::kNewton;
  return o;
}

AbreuSolution solve_coupled(const CoupledSystem& sys, const AbreuOptions& opts, const AbreuSolution* initial) {
  if (!(opts.tol > 0.0) || opts.max_outer < 1 || !(opts.tau > 0.0 && opts.tau <= 1.0) || opts.stall_window < 1)
    throw std::invalid_argument("invalid AbreuOptions");
  validate(opts.ma);
  const auto t0 = std::chrono::steady_clock::now();
  const Grid2D& g = *sys.grid;
  const double w_floor = 1e-6 * boundary_inf(g, sys.psi);

  AbreuSolution sol;
  SolveReport& rep = sol.report;
  if (initial) {
    if (initial->u.grid() != sys.grid) throw std::invalid_argument("solve_coupled: initial pair on a different grid");
    sol.u = initial->u;
    sol.w = initial->w;
  } else {
    sol.u = solve_ma(sys.grid, ScalarField(sys.grid, 1.0 / boundary_mean(g, sys.psi)), sys.phi, opts.ma).u;
    sol.w = inverse_det(sol.u, sys.phi, opts.ma.clamp);
  }

  bool converged = false;
  if (opts.coupling == Coupling::kPicard) {
    PicardImage img = picard_map(sys, sol.u, w_floor, opts.ma);
    double d = joint_defect(sol.u, sol.w, img);
    rep.residual_history.push_back({sup_diff(sol.u, img.u), sup_diff(sol.w, img.w)});
    double best = d;
    int since_best = 0;
    double tau = opts.tau;
    while (d > opts.tol && rep.outer_iters < opts.max_outer) {
      bool accepted = false;
      while (tau >= opts.tau / 64.0) {
        ScalarField ut = blend(sol.u, img.u, tau), wt = blend(sol.w, img.w, tau);
        PicardImage it = picard_map(sys, ut, w_floor, opts.ma);
        const double dt = joint_defect(ut, wt, it);
        if (it.ok && dt <= d) {
          sol.u = std::move(ut);
          sol.w = std::move(wt);
          img = std::move(it);
          rep.residual_history.push_back({sup_diff(sol.u, img.u), sup_diff(sol.w, img.w)});
          d = dt;
          accepted = true;
          break;
        }
        tau *= 0.5;
      }
      if (!accepted) {
        rep.message = "OuterStall: relaxation fell below tau/64 without decrease";
        break;
      }
      rep.damping_used = std::min(rep.damping_used, tau);
      ++rep.outer_iters;
      tau = std::min(opts.tau, 2.0 * tau);
      if (d < best * (1.0 - 1e-12)) {
        best = d;
        since_best = 0;
      } else if (++since_best >= opts.stall_window) {
        rep.message = "OuterStall: no decrease over " + std::to_string(opts.stall_window) + " iterations";
        break;
      }
    }
    if (d <= opts.tol) {
      // The fixed-point defect bounds the iterate change, not the equation
      // residuals; a few Newton steps bring r1, r2 to the tolerance.
      sol.u = std::move(img.u);
      sol.w = std::move(img.w);
      converged = newton_phase(sol.u, sol.w, sys, opts, 10, false, rep);
    }
  } else {
    if (!initial) sol.w = solve_w(sys, sol.u);
    const AbreuResidual r0 = coupled_residual(sol.u, sol.w, sys, opts.ma.clamp);
    rep.residual_history.push_back({sup_norm(r0.r1) * sys.scale_eps, sup_norm(r0.r2)});
    converged = newton_phase(sol.u, sol.w, sys, opts, opts.max_outer, true, rep);
  }

  rep.converged = converged;
  if (!converged && rep.message.empty()) rep.message = "max_outer reached";
  for (int k : g.inside_nodes())
    if (sol.w[k] <= w_floor) rep.floor_active = true;
  if (rep.floor_active) rep.message += (rep.message.empty() ? "" : "; ") + std::string("w floor active");
  rep.apriori = apriori_check(sol.u, sol.w, sys.phi, sys.psi);
  rep.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

AbreuSolution solve_sbvp(const AbreuProblem& p, const GridPtr& grid, const AbreuOptions& opts) {
  validate(p, *grid);
  return solve_coupled(CoupledSystem{grid, p.phi, p.psi, p.scale_eps, abreu_rhs(p)}, opts);
}

AbreuSolution solve_sbvp(const AbreuProblem& p, int n, const AbreuOptions& opts) {
  return solve_sbvp(p, Grid2D::build(p.domain, n), opts);
}

AprioriChecks apriori_check(const ScalarField& u, const ScalarField& w, const PlaneFn& phi, const PlaneFn& psi) {
  const GridPtr& grid = u.grid();
  const Grid2D& g = *grid;
  const BoundaryFn bc = phi;
  AprioriChecks a;
  a.min_det = kInf;
  a.max_det = -kInf;
  a.min_w_interior = kInf;
  const VectorField Du = gradient(u, bc);
  for (int k : g.inside_nodes()) {
    a.sup_abs_u = std::max(a.sup_abs_u, std::abs(u[k]));
    const double gn = std::hypot(Du[k].x, Du[k].y);
    if (gn > a.sup_grad_u) {
      a.sup_grad_u = gn;
      a.argmax_grad = k;
    }
    const double det = hessian_at(u, k, bc).det();
    a.min_det = std::min(a.min_det, det);
    a.max_det = std::max(a.max_det, det);
    if (g.node_class(k) == NodeClass::kInterior) a.min_w_interior = std::min(a.min_w_interior, w[k]);
  }
  a.min_w_boundary = boundary_inf(g, psi);

  // Lipschitz constant of rho over the box, by central differences on the grid.
  const ConvexDomain& dom = *g.domain();
  double lip = 0.0;
  const double e = 1e-6;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x(i), y = g.y(j);
      const double gx = (dom.rho(x + e, y) - dom.rho(x - e, y)) / (2 * e);
      const double gy = (dom.rho(x, y + e) - dom.rho(x, y - e)) / (2 * e);
      lip = std::max(lip, std::hypot(gx, gy));
    }
  const double phi_max = boundary_sup(g, phi);
  a.grad_bound_ok = true;
  for (int k : g.inside_nodes()) {
    if (g.node_class(k) != NodeClass::kInterior) continue;
    const double x = g.x(g.ix(k)), y = g.y(g.jy(k));
    const double dist = std::abs(dom.rho(x, y)) / lip;
    const double bound = (phi_max - u[k]) / dist;
    if (std::hypot(Du[k].x, Du[k].y) > bound * (1.0 + 1e-8) + 1e-10) a.grad_bound_ok = false;
  }
  return a;
}

Manufactured manufactured_exponential(const ConvexDomain& domain, double q, double delta) {
  Manufactured m;
  m.u_exact = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)); };
  m.w_exact = [](double x, double y) {
    const double s = x * x + y * y;
    return std::exp(-s) / (1.0 + s);
  };
  // Radial closed forms in s = r^2: for u = e^{s/2}, U^ij D_ij w(s) =
  // e^{s/2} [(4 + 2s) w' + 4 s w'']; div(a Du) = a Lap u + (q-2) P^{(q-4)/2} Du.D^2u.Du
  // with P = |Du|^2 + delta.
  const auto source = [q, delta](double x, double y) {
    const double s = x * x + y * y, es = std::exp(s), eh = std::exp(0.5 * s);
    const double w1 = -(2.0 + s) / (es * (1.0 + s) * (1.0 + s));
    const double w2 = (s * s + 4.0 * s + 5.0) / (es * std::pow(1.0 + s, 3));
    const double Lw = eh * ((4.0 + 2.0 * s) * w1 + 4.0 * s * w2);
    const double P = s * es + delta;
    const double lap = eh * (2.0 + s), pHp = es * eh * (s + s * s);
    // pHp / P tends to 1 as s -> 0 with delta = 0.
    const double ratio = P > 0.0 ? pHp / P : 1.0;
    const double div = std::pow(P, 0.5 * (q - 2.0)) * (lap + (q - 2.0) * ratio);
    return Lw + div;
  };
  m.problem.domain = domain;
  m.problem.q = q;
  m.problem.delta = delta;
  m.problem.phi = m.u_exact;
  m.problem.psi = m.w_exact;
  m.problem.F0z = [source](double x, double y, double) { return source(x, y); };
  return m;
}

}  // namespace abreu
