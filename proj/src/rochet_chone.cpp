#include "abreu/rochet_chone.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>

#include "abreu/monge_ampere.hpp"
#include "abreu/sparse.hpp"

namespace abreu {

namespace f0 {

F0Term linear(const PlaneFn& gamma) {
  return {[gamma](double x, double y, double z) { return z * gamma(x, y); },
          [gamma](double x, double y, double) { return gamma(x, y); }, "linear"};
}

F0Term none() {
  return {[](double, double, double) { return 0.0; }, [](double, double, double) { return 0.0; }, "none"};
}

F0Term quadratic(double c) {
  return {[c](double, double, double z) { return c * z * z; }, [c](double, double, double z) { return 2.0 * c * z; },
          "quadratic"};
}

F0Term tracking(const PlaneFn& target) {
  return {[target](double x, double y, double z) {
            const double d = z - target(x, y);
            return d * d;
          },
          [target](double x, double y, double z) { return 2.0 * (z - target(x, y)); }, "tracking"};
}

}  // namespace f0

namespace {

constexpr double kLogFloor = 1e-14;

const PlaneFn kOne = [](double, double) { return 1.0; };
const PlaneFn kZero = [](double, double) { return 0.0; };

std::array<double, 2> cell_center(const Grid2D& g, int c) {
  const int ncx = g.nx() - 1;
  return {g.x(c % ncx) + 0.5 * g.h(), g.y(c / ncx) + 0.5 * g.h()};
}

bool in_omega0(const Grid2D& g, double x, double y) { return g.domain()->inner_rho(x, y) < 0.0; }

const Grid2D& checked_grid(const ScalarField& u) {
  const Grid2D& g = *u.grid();
  if (!g.domain() || !g.domain()->has_inner()) throw std::invalid_argument("grid domain has no inner region");
  return g;
}

// Cell flux gamma [(|G|^2 + delta)^((q-2)/2) G - x] on Omega_0 cells; with
// delta = 0 the power term vanishes at G = 0.
CellField<Vec2> omega0_flux(const ScalarField& u, const RCProblem& p, double delta) {
  const Grid2D& g = *u.grid();
  CellField<Vec2> G = cell_gradient(u);
  for (std::size_t c = 0; c < G.v.size(); ++c) {
    if (!G.valid[c]) continue;
    const auto xc = cell_center(g, static_cast<int>(c));
    if (!in_omega0(g, xc[0], xc[1])) {
      G.valid[c] = false;
      continue;
    }
    const double s = G.v[c].x * G.v[c].x + G.v[c].y * G.v[c].y + delta;
    const double a = s > 0.0 ? std::pow(s, 0.5 * (p.q - 2.0)) : 0.0;
    const double gam = p.gamma(xc[0], xc[1]);
    G.v[c] = {gam * (a * G.v[c].x - xc[0]), gam * (a * G.v[c].y - xc[1])};
  }
  return G;
}

// Omega_0 flux energy: cells with centre in Omega_0, weight h^2.
double omega0_flux_energy(const ScalarField& u, const RCProblem& p, double delta) {
  const Grid2D& g = *u.grid();
  const CellField<Vec2> G = cell_gradient(u);
  const double h2 = g.h() * g.h();
  double e = 0.0;
  for (std::size_t c = 0; c < G.v.size(); ++c) {
    if (!G.valid[c]) continue;
    const auto xc = cell_center(g, static_cast<int>(c));
    if (!in_omega0(g, xc[0], xc[1])) continue;
    const double s = G.v[c].x * G.v[c].x + G.v[c].y * G.v[c].y + delta;
    const double phi = s > 0.0 ? std::pow(s, 0.5 * p.q) / p.q : 0.0;
    e += h2 * (phi - xc[0] * G.v[c].x - xc[1] * G.v[c].y) * p.gamma(xc[0], xc[1]);
  }
  return e;
}

// Corner nodes of cell c.
std::array<int, 4> cell_corners(const Grid2D& g, int c) {
  const int ncx = g.nx() - 1;
  const int k00 = g.index(c % ncx, c / ncx);
  return {k00, k00 + 1, k00 + g.nx(), k00 + g.nx() + 1};
}

// Cells with four inside corners and centre in Omega_0.
std::vector<int> omega0_cells(const Grid2D& g) {
  std::vector<int> cells;
  const int nc = (g.nx() - 1) * (g.ny() - 1);
  for (int c = 0; c < nc; ++c) {
    const auto k = cell_corners(g, c);
    if (!(g.inside(k[0]) && g.inside(k[1]) && g.inside(k[2]) && g.inside(k[3]))) continue;
    const auto xc = cell_center(g, c);
    if (in_omega0(g, xc[0], xc[1])) cells.push_back(c);
  }
  return cells;
}

double corner_mean(const ScalarField& u, const std::array<int, 4>& k) {
  return 0.25 * (u[k[0]] + u[k[1]] + u[k[2]] + u[k[3]]);
}

// F0 by the cell midpoint rule with z the corner mean, weight h^2.
double omega0_lower_energy(const ScalarField& u, const RCProblem& p) {
  const Grid2D& g = *u.grid();
  const double h2 = g.h() * g.h();
  double e = 0.0;
  for (int c : omega0_cells(g)) {
    const auto xc = cell_center(g, c);
    e += h2 * p.F0.value(xc[0], xc[1], corner_mean(u, cell_corners(g, c)));
  }
  return e;
}

// Gradient of omega0_lower_energy divided by h^2.
ScalarField omega0_lower_gradient(const ScalarField& u, const RCProblem& p) {
  const Grid2D& g = *u.grid();
  ScalarField out(u.grid(), 0.0);
  for (int c : omega0_cells(g)) {
    const auto xc = cell_center(g, c);
    const auto k = cell_corners(g, c);
    const double fz = 0.25 * p.F0.dz(xc[0], xc[1], corner_mean(u, k));
    for (int n : k) out[n] += fz;
  }
  return out;
}

}  // namespace

RCProblem classic_rc(double q) {
  RCProblem p;
  p.q = q;
  p.gamma = kOne;
  p.phi = kZero;
  p.psi = kOne;
  p.F0 = f0::linear(kOne);
  return p;
}

void validate(const RCProblem& p, const Grid2D& grid) {
  if (!p.domain.has_inner()) throw std::invalid_argument("RCProblem: domain needs an inner region");
  if (!(p.domain.inner_margin(64) > 0.0)) throw std::invalid_argument("RCProblem: Omega_0 must be compactly inside Omega");
  if (!(p.q > 1.0)) throw std::invalid_argument("RCProblem: q must exceed 1");
  if (!p.gamma || !p.phi || !p.psi || !p.F0.value || !p.F0.dz)
    throw std::invalid_argument("RCProblem: gamma, phi, psi and F0 must be set");
  const GridPtr gp(&grid, [](const Grid2D*) {});
  if (!assert_convex(sample(gp, p.phi), p.phi).ok) throw std::invalid_argument("RCProblem: phi is not convex");
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (int k : grid.inside_nodes()) {
    const double v = p.gamma(grid.x(grid.ix(k)), grid.y(grid.jy(k)));
    gmin = std::min(gmin, v);
    gmax = std::max(gmax, v);
  }
  if (gmin < 0.0) throw std::invalid_argument("RCProblem: gamma must be nonnegative");
  if (p.q > 2.0 && gmax - gmin > 1e-12 * (1.0 + std::abs(gmax)))
    throw std::invalid_argument("RCProblem: gamma must be constant for q>2");
  const double zs[] = {-3.0, -1.0, -0.25, 0.0, 0.5, 1.0, 4.0};
  const auto& nodes = grid.inside_nodes();
  for (std::size_t i = 0; i < nodes.size(); i += 7) {
    const double x = grid.x(grid.ix(nodes[i])), y = grid.y(grid.jy(nodes[i]));
    for (double a : zs)
      for (double b : zs)
        if ((p.F0.dz(x, y, a) - p.F0.dz(x, y, b)) * (a - b) < -1e-12)
          throw std::invalid_argument("RCProblem: F0_z is not monotone in z");
  }
  double psi_min = std::numeric_limits<double>::infinity();
  for (int k : grid.inside_nodes())
    for (int d = 0; d < 8; ++d)
      if (grid.crosses(k, d)) {
        const auto c = grid.crossing_point(k, d);
        psi_min = std::min(psi_min, p.psi(c[0], c[1]));
      }
  if (!(psi_min > 0.0)) throw std::invalid_argument("RCProblem: psi must be positive on the boundary");
}

PlaneFn utilde_fn(const RCProblem& p, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("lift_utilde: eps must be positive");
  const double c = std::pow(eps, 1.0 / 12.0);
  return [phi = p.phi, domain = p.domain, c](double x, double y) {
    return phi(x, y) + c * (std::exp(domain.rho(x, y)) - 1.0);
  };
}

ScalarField lift_utilde(const RCProblem& p, const GridPtr& grid, double eps) { return sample(grid, utilde_fn(p, eps)); }

std::vector<bool> omega0_nodes(const Grid2D& grid) {
  if (!grid.domain() || !grid.domain()->has_inner()) throw std::invalid_argument("grid domain has no inner region");
  std::vector<bool> in0(grid.size(), false);
  for (int k : grid.inside_nodes()) in0[k] = in_omega0(grid, grid.x(grid.ix(k)), grid.y(grid.jy(k)));
  return in0;
}

ScalarField rc_rhs(const ScalarField& u, const RCProblem& p, double eps) {
  const Grid2D& g = checked_grid(u);
  if (!(eps > 0.0)) throw std::invalid_argument("rc_rhs: eps must be positive");
  ScalarField f = cell_divergence(omega0_flux(u, p, eps));
  const ScalarField lower = omega0_lower_gradient(u, p);
  const ScalarField ut = lift_utilde(p, u.grid(), eps);
  const std::vector<bool> in0 = omega0_nodes(g);
  for (int k : g.inside_nodes()) {
    f[k] = lower[k] - f[k];
    if (!in0[k]) f[k] += (u[k] - ut[k]) / eps;
  }
  return f;
}

JqeEnergy jqe_energy(const ScalarField& u, const RCProblem& p, double eps) {
  const Grid2D& g = checked_grid(u);
  if (!(eps > 0.0)) throw std::invalid_argument("jqe_energy: eps must be positive");
  const double h2 = g.h() * g.h();
  const std::vector<bool> in0 = omega0_nodes(g);
  const ScalarField ut = lift_utilde(p, u.grid(), eps);
  const BoundaryFn bc = p.phi;
  const double clamp = MAOptions{}.clamp;
  JqeEnergy e;
  e.flux = omega0_flux_energy(u, p, eps);
  e.lower = omega0_lower_energy(u, p);
  for (int k : g.inside_nodes()) {
    double det = clamped_det(hessian_at(u, k, bc), clamp);
    if (det < kLogFloor) {
      det = kLogFloor;
      e.floor_active = true;
    }
    e.logdet -= eps * h2 * std::log(det);
    if (!in0[k]) e.penalty += h2 * (u[k] - ut[k]) * (u[k] - ut[k]) / (2.0 * eps);
  }
  e.total = e.flux + e.lower + e.logdet + e.penalty;
  return e;
}

ScalarField logdet_gradient(const ScalarField& u, const RCProblem& p, double eps) {
  const Grid2D& g = checked_grid(u);
  const DofMap dofs(g);
  const double clamp = MAOptions{}.clamp;
  const BoundaryFn bc = p.phi;
  Eigen::VectorXd w(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) {
    const double det = clamped_det(hessian_at(u, dofs.node(d), bc), clamp);
    w[d] = det < kLogFloor ? 0.0 : 1.0 / det;
  }
  const Eigen::VectorXd gvec = -eps * (ma_jacobian(u, p.phi, clamp, dofs).transpose() * w);
  ScalarField out(u.grid(), 0.0);
  for (int d = 0; d < dofs.size(); ++d) out[dofs.node(d)] = gvec[d];
  return out;
}

SymMat rc_flux_hessian(Vec2 p, double q, double eps, double gamma) {
  const double s = p.x * p.x + p.y * p.y + eps;
  const double a = std::pow(s, 0.5 * (q - 2.0));
  const double b = (q - 2.0) / s;
  return {gamma * a * (1.0 + b * p.x * p.x), gamma * a * b * p.x * p.y, gamma * a * (1.0 + b * p.y * p.y)};
}

namespace {

CoupledSystem rc_system(const RCProblem& p, const GridPtr& grid, double eps, double lambda) {
  return {grid, p.phi, p.psi, eps, [p, eps, lambda](const ScalarField& u) {
            ScalarField f = rc_rhs(u, p, eps);
            if (lambda != 1.0)
              for (double& v : f.values()) v *= lambda;
            return f;
          }};
}

std::optional<AbreuSolution> try_solve(const CoupledSystem& sys, const AbreuOptions& opts, const AbreuSolution* start) {
  try {
    AbreuSolution s = solve_coupled(sys, opts, start);
    if (s.report.converged) return s;
  } catch (const std::runtime_error&) {
  } catch (const NonConvexCoefficient&) {
  } catch (const NonPositiveRHS&) {
  }
  return std::nullopt;
}

constexpr double kMinContinuationStep = 1.0 / 256.0;

// Homotopy lambda: 0 -> 1 on the right-hand side lambda f_eps. At lambda = 0
// the system is the plain second boundary value problem.
std::optional<AbreuSolution> rhs_continuation(const RCProblem& p, const GridPtr& grid, double eps,
                                              const AbreuOptions& opts, int& solves) {
  std::optional<AbreuSolution> cur = try_solve(rc_system(p, grid, eps, 0.0), opts, nullptr);
  ++solves;
  if (!cur) return std::nullopt;
  double lam = 0.0, dl = 0.25;
  while (lam < 1.0) {
    const double next = std::min(1.0, lam + dl);
    std::optional<AbreuSolution> s = try_solve(rc_system(p, grid, eps, next), opts, &*cur);
    ++solves;
    if (s) {
      cur = std::move(s);
      lam = next;
      dl = std::min(2.0 * dl, 1.0);
    } else if ((dl *= 0.5) < kMinContinuationStep) {
      return std::nullopt;
    }
  }
  return cur;
}

// Geometric steps in eps from a converged run at eps_from.
std::optional<AbreuSolution> eps_continuation(const RCProblem& p, const GridPtr& grid, double eps_from,
                                              AbreuSolution start, double eps, const AbreuOptions& opts,
                                              int& solves) {
  double cur_eps = eps_from, frac = 0.5;
  while (cur_eps != eps) {
    const double next = frac >= 1.0 ? eps : cur_eps * std::pow(eps / cur_eps, frac);
    std::optional<AbreuSolution> s = try_solve(rc_system(p, grid, next, 1.0), opts, &start);
    ++solves;
    if (s) {
      start = std::move(*s);
      cur_eps = next;
      frac = std::min(2.0 * frac, 1.0);
    } else if ((frac *= 0.5) < kMinContinuationStep) {
      return std::nullopt;
    }
  }
  return start;
}

}  // namespace

RCApproxRun solve_rc_approx(const RCProblem& p, double eps, const GridPtr& grid, AbreuOptions opts,
                            const RCApproxRun* initial) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("solve_rc_approx: eps must lie in (0, 1)");
  validate(p, *grid);
  const CoupledSystem sys = rc_system(p, grid, eps, 1.0);
  AbreuSolution start;
  if (initial) start = AbreuSolution{initial->u, initial->w, {}};
  // A failed direct solve falls back to continuation; its error is rethrown
  // only when continuation fails as well.
  std::optional<AbreuSolution> direct;
  std::exception_ptr error;
  try {
    direct = solve_coupled(sys, opts, initial ? &start : nullptr);
  } catch (const std::runtime_error&) {
    error = std::current_exception();
  } catch (const NonConvexCoefficient&) {
    error = std::current_exception();
  } catch (const NonPositiveRHS&) {
    error = std::current_exception();
  }
  if (!direct || !direct->report.converged) {
    int solves = 0;
    std::optional<AbreuSolution> c = initial && initial->eps != eps
                                         ? eps_continuation(p, grid, initial->eps, start, eps, opts, solves)
                                         : rhs_continuation(p, grid, eps, opts, solves);
    if (c) {
      direct = std::move(c);
      direct->report.message = (initial && initial->eps != eps ? "eps continuation, " : "rhs continuation, ") +
                               std::to_string(solves) + " solves";
    } else if (!direct) {
      std::rethrow_exception(error);
    }
  }
  AbreuSolution& s = *direct;
  RCApproxRun run;
  run.eps = eps;
  const ScalarField ut = lift_utilde(p, grid, eps);
  ScalarField sq(grid, 0.0);
  for (int k : grid->inside_nodes()) sq[k] = (s.u[k] - ut[k]) * (s.u[k] - ut[k]);
  run.penalty_l2 = integrate(sq, Region::kOmegaMinusOmega0);
  run.energy = jqe_energy(s.u, p, eps);
  run.u = std::move(s.u);
  run.w = std::move(s.w);
  run.report = std::move(s.report);
  return run;
}

RCApproxRun solve_rc_approx(const RCProblem& p, double eps, int n, AbreuOptions opts) {
  return solve_rc_approx(p, eps, Grid2D::build(p.domain, n), opts);
}

double rc_objective(const ScalarField& u, const RCProblem& p) {
  checked_grid(u);
  return omega0_flux_energy(u, p, 0.0) + omega0_lower_energy(u, p);
}

namespace {

// Second-difference constraint u[a] - 2 u[c] + u[b] >= 0.
struct ConeRow {
  std::array<int, 3> node;
  std::array<double, 3> coef;
};

std::vector<ConeRow> cone_rows(const Grid2D& g) {
  std::vector<ConeRow> rows;
  for (int k : g.inside_nodes())
    for (int d : {kE, kN, kNE, kSE}) {
      const int a = g.neighbor(k, d), b = g.neighbor(k, opposite(d));
      if (a >= 0 && b >= 0) rows.push_back({{a, k, b}, {1.0, -2.0, 1.0}});
    }
  return rows;
}

double row_value(const ConeRow& r, const ScalarField& u) {
  return r.coef[0] * u[r.node[0]] + r.coef[1] * u[r.node[1]] + r.coef[2] * u[r.node[2]];
}

// Cyclic Dykstra projection onto the cone rows acting on free nodes only.
class ConeProjector {
 public:
  ConeProjector(const std::vector<ConeRow>& rows, const std::vector<bool>& free) {
    for (const ConeRow& r : rows) {
      ConeRow fr = r;
      double n2 = 0.0;
      bool any = false;
      for (int i = 0; i < 3; ++i) {
        if (!free[r.node[i]]) {
          fr.coef[i] = 0.0;
          continue;
        }
        n2 += r.coef[i] * r.coef[i];
        any = true;
      }
      if (!any) continue;
      rows_.push_back(r);
      free_coef_.push_back(fr.coef);
      inv_norm2_.push_back(1.0 / n2);
    }
  }

  void project(ScalarField& u, int sweeps) const {
    std::vector<std::array<double, 3>> inc(rows_.size(), {0.0, 0.0, 0.0});
    for (int s = 0; s < sweeps; ++s) {
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const ConeRow& r = rows_[i];
        for (int a = 0; a < 3; ++a) u[r.node[a]] += inc[i][a];
        const double v = row_value(r, u);
        const double t = v < 0.0 ? -v * inv_norm2_[i] : 0.0;
        for (int a = 0; a < 3; ++a) inc[i][a] = -t * free_coef_[i][a];
        for (int a = 0; a < 3; ++a) u[r.node[a]] += t * free_coef_[i][a];
      }
    }
  }

  double violation(const ScalarField& u) const {
    double m = 0.0;
    for (const ConeRow& r : rows_) m = std::max(m, -row_value(r, u));
    return m;
  }

 private:
  std::vector<ConeRow> rows_;
  std::vector<std::array<double, 3>> free_coef_;
  std::vector<double> inv_norm2_;
};

}  // namespace

double cone_violation(const ScalarField& u) {
  double m = 0.0;
  for (const ConeRow& r : cone_rows(*u.grid())) m = std::max(m, -row_value(r, u));
  return m;
}

OracleResult oracle_minimize(const RCProblem& p, int n_coarse, const OracleOptions& opts) {
  if (n_coarse > 33) throw std::invalid_argument("oracle_minimize: n_coarse must be <= 33");
  return oracle_minimize(p, Grid2D::build(p.domain, n_coarse), opts);
}

OracleResult oracle_minimize(const RCProblem& p, const GridPtr& grid, const OracleOptions& opts) {
  if (grid->nx() > 33 || grid->ny() > 33) throw std::invalid_argument("oracle_minimize: grid must be at most 33x33");
  if (opts.iters < 0 || opts.sweeps < 1) throw std::invalid_argument("oracle_minimize: invalid options");
  const Grid2D& g = *grid;
  const std::vector<bool> free = omega0_nodes(g);
  const std::vector<ConeRow> rows = cone_rows(g);
  OracleResult res;
  res.u = sample(grid, p.phi);
  for (const ConeRow& r : rows)
    if (row_value(r, res.u) < -1e-12) throw std::invalid_argument("oracle_minimize: phi is not discretely convex (infeasible start)");
  const ConeProjector proj(rows, free);

  const double h2 = g.h() * g.h();
  const auto gradient_of = [&](const ScalarField& u) {
    ScalarField gr = cell_divergence(omega0_flux(u, p, 0.0));
    const ScalarField lower = omega0_lower_gradient(u, p);
    for (int k : g.inside_nodes()) gr[k] = free[k] ? lower[k] - gr[k] : 0.0;
    return gr;
  };

  ScalarField u = res.u;
  double J = rc_objective(u, p);
  res.history.push_back(J);
  ScalarField best = u;
  double best_J = J;
  double step = 1.0;
  for (int it = 0; it < opts.iters; ++it) {
    const ScalarField gr = gradient_of(u);
    bool accepted = false;
    while (step > 1e-14) {
      ScalarField trial = u;
      for (int k : g.inside_nodes())
        if (free[k]) trial[k] -= step * gr[k];
      proj.project(trial, opts.sweeps);
      double lin = 0.0, quad = 0.0;
      for (int k : g.inside_nodes()) {
        if (!free[k]) continue;
        const double d = trial[k] - u[k];
        lin += gr[k] * d;
        quad += d * d;
      }
      const double Jt = rc_objective(trial, p);
      if (Jt <= J + h2 * (lin + quad / (2.0 * step)) && Jt <= J) {
        const bool moved = quad > 0.0;
        u = std::move(trial);
        J = Jt;
        accepted = moved;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++res.iterations;
    res.history.push_back(J);
    if (J < best_J) {
      best_J = J;
      best = u;
    }
    step *= 2.0;
  }

  // Final projection to the feasibility tolerance.
  int done = 0;
  while (proj.violation(best) > opts.feas_tol && done < opts.max_final_sweeps) {
    proj.project(best, 100);
    done += 100;
  }
  res.u = std::move(best);
  res.objective = rc_objective(res.u, p);
  res.max_violation = proj.violation(res.u);
  return res;
}

ConvergenceTable epsilon_sweep(const RCProblem& p, const std::vector<double>& eps_list, int n,
                               const AbreuOptions& opts, const OracleOptions& oracle, int jobs) {
  if (eps_list.empty()) throw std::invalid_argument("epsilon_sweep: empty eps list");
  if (jobs < 1) throw std::invalid_argument("epsilon_sweep: jobs must be positive");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("epsilon_sweep: eps list must strictly decrease");
  const GridPtr grid = Grid2D::build(p.domain, n);
  const Grid2D& g = *grid;
  const OracleResult orc = oracle_minimize(p, grid, oracle);

  const std::vector<bool> in0 = omega0_nodes(g);
  std::vector<int> core;
  for (int k : g.inside_nodes()) {
    bool ok = true;
    for (int b = -2; b <= 2 && ok; ++b)
      for (int a = -2; a <= 2 && ok; ++a) ok = g.inside(g.ix(k) + a, g.jy(k) + b) && in0[g.index(g.ix(k) + a, g.jy(k) + b)];
    if (ok) core.push_back(k);
  }

  const std::size_t rows = eps_list.size();
  ConvergenceTable table;
  table.rows.resize(rows);
  table.runs.resize(rows);
  const auto solve_row = [&](std::size_t i, const RCApproxRun* prev) {
    SweepRow& row = table.rows[i];
    RCApproxRun& run = table.runs[i];
    row.eps = run.eps = eps_list[i];
    try {
      run = solve_rc_approx(p, row.eps, grid, opts, prev);
      row.converged = run.report.converged;
      row.message = run.report.message;
      row.outer_iters = run.report.outer_iters;
      row.penalty_l2 = run.penalty_l2;
      row.energy = run.energy.total;
      for (int k : core) row.dist_oracle = std::max(row.dist_oracle, std::abs(run.u[k] - orc.u[k]));
    } catch (const std::exception& e) {
      row.converged = false;
      row.message = e.what();
      row.dist_oracle = row.penalty_l2 = row.energy = std::numeric_limits<double>::quiet_NaN();
      run = RCApproxRun{};
      run.eps = row.eps;
    }
  };

  if (jobs == 1) {
    const RCApproxRun* prev = nullptr;
    for (std::size_t i = 0; i < rows; ++i) {
      solve_row(i, prev);
      if (table.rows[i].converged) prev = &table.runs[i];
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(rows)); ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < rows;) solve_row(i, nullptr);
      });
    for (std::thread& t : pool) t.join();
  }
  table.oracle = orc;
  table.oracle_objective = orc.objective;
  return table;
}

}  // namespace abreu
