#include "abreu/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace abreu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T nan_value();
template <>
double nan_value<double>() {
  return kNaN;
}
template <>
Vec2 nan_value<Vec2>() {
  return {kNaN, kNaN};
}
template <>
SymMat nan_value<SymMat>() {
  return {kNaN, kNaN, kNaN};
}

// Parameter t in (0, 1] where rho crosses zero on the segment a -> b, given
// rho(a) < 0 <= rho(b). Bisection to 1e-12 of the segment length.
double locate_crossing(const ConvexDomain& dom, double ax, double ay, double bx, double by) {
  if (dom.rho(bx, by) == 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (dom.rho(ax + mid * (bx - ax), ay + mid * (by - ay)) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::max(0.5 * (lo + hi), 1e-12);
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexDomain

ConvexDomain::ConvexDomain(PlaneFn rho, BBox bbox, std::string name)
    : rho_(std::move(rho)), bbox_(bbox), name_(std::move(name)) {
  if (!(bbox_.xmax > bbox_.xmin) || !(bbox_.ymax > bbox_.ymin))
    throw GeometryError("degenerate bounding box");
}

ConvexDomain ConvexDomain::disk(double r, double cx, double cy) {
  if (!(r > 0.0)) throw GeometryError("disk radius must be positive");
  return ConvexDomain(
      [=](double x, double y) { return (x - cx) * (x - cx) + (y - cy) * (y - cy) - r * r; },
      {cx - r, cx + r, cy - r, cy + r}, "disk");
}

ConvexDomain ConvexDomain::square(double a, double cx, double cy) {
  if (!(a > 0.0)) throw GeometryError("square half-width must be positive");
  return ConvexDomain(
      [=](double x, double y) { return std::max(std::abs(x - cx), std::abs(y - cy)) - a; },
      {cx - a, cx + a, cy - a, cy + a}, "square");
}

ConvexDomain ConvexDomain::superellipse(double p) {
  if (!(p >= 2.0)) throw GeometryError("superellipse exponent must be >= 2");
  return ConvexDomain(
      [=](double x, double y) { return std::pow(std::abs(x), p) + std::pow(std::abs(y), p) - 1.0; },
      {-1.0, 1.0, -1.0, 1.0}, "superellipse");
}

ConvexDomain ConvexDomain::with_inner(PlaneFn inner_rho, std::string inner_name) const {
  ConvexDomain d = *this;
  d.inner_rho_ = std::move(inner_rho);
  d.inner_name_ = std::move(inner_name);
  return d;
}

ConvexDomain ConvexDomain::with_inner_box(double x0, double x1, double y0, double y1) const {
  if (!(x1 > x0) || !(y1 > y0)) throw GeometryError("degenerate inner box");
  return with_inner(
      [=](double x, double y) { return std::max(std::max(x0 - x, x - x1), std::max(y0 - y, y - y1)); },
      "box");
}

double ConvexDomain::inner_rho(double x, double y) const {
  if (!inner_rho_) throw GeometryError("domain has no inner region");
  return inner_rho_(x, y);
}

bool ConvexDomain::sampled_convexity(int count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(bbox_.xmin, bbox_.xmax), uy(bbox_.ymin, bbox_.ymax);
  std::vector<std::array<double, 2>> pts;
  int guard = 0;
  while (static_cast<int>(pts.size()) < count && guard++ < 100 * count) {
    const double x = ux(rng), y = uy(rng);
    if (rho(x, y) < 0.0) pts.push_back({x, y});
  }
  if (pts.size() < 2) return false;
  for (std::size_t a = 0; a + 1 < pts.size(); ++a) {
    const auto& p = pts[a];
    const auto& q = pts[a + 1];
    if (!(rho(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])) < 0.0)) return false;
  }
  return true;
}

double ConvexDomain::inner_margin(int samples_per_axis) const {
  if (!inner_rho_) throw GeometryError("domain has no inner region");
  double margin = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int a = 0; a < samples_per_axis; ++a) {
    for (int b = 0; b < samples_per_axis; ++b) {
      const double x = bbox_.xmin + (bbox_.xmax - bbox_.xmin) * (a + 0.5) / samples_per_axis;
      const double y = bbox_.ymin + (bbox_.ymax - bbox_.ymin) * (b + 0.5) / samples_per_axis;
      if (inner_rho_(x, y) < 0.0) {
        margin = std::min(margin, -rho(x, y));
        any = true;
      }
    }
  }
  return any ? margin : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Grid2D

std::shared_ptr<const Grid2D> Grid2D::build(const ConvexDomain& domain, int n) {
  if (n < 5) throw GeometryError("grid needs at least 5 nodes per axis");
  auto g = std::shared_ptr<Grid2D>(new Grid2D());
  g->domain_ = domain;
  g->has_domain_ = true;
  const BBox& b = domain.bbox();
  const double side = std::max(b.xmax - b.xmin, b.ymax - b.ymin);
  const double cx = 0.5 * (b.xmin + b.xmax), cy = 0.5 * (b.ymin + b.ymax);
  g->nx_ = g->ny_ = n;
  g->h_ = side / (n - 1);
  g->xmin_ = cx - 0.5 * side;
  g->ymin_ = cy - 0.5 * side;

  const int N = n * n;
  std::vector<double> rho(N);
  for (int k = 0; k < N; ++k) rho[k] = domain.rho(g->x(g->ix(k)), g->y(g->jy(k)));

  g->cls_.assign(N, NodeClass::kExterior);
  g->theta_.assign(static_cast<std::size_t>(N) * 8, 1.0);
  for (int k = 0; k < N; ++k) {
    if (!(rho[k] < 0.0)) continue;
    const int i = g->ix(k), j = g->jy(k);
    bool all_axis_inside = true;
    for (int d = 0; d < 8; ++d) {
      const int ii = i + kDirDx[d], jj = j + kDirDy[d];
      const bool on_grid = ii >= 0 && jj >= 0 && ii < n && jj < n;
      const bool nb_inside = on_grid && rho[g->index(ii, jj)] < 0.0;
      if (nb_inside) continue;
      if (d < 4) all_axis_inside = false;
      g->theta_[static_cast<std::size_t>(k) * 8 + d] =
          locate_crossing(domain, g->x(i), g->y(j), g->x(i) + kDirDx[d] * g->h_,
                          g->y(j) + kDirDy[d] * g->h_);
    }
    g->cls_[k] = all_axis_inside ? NodeClass::kInterior : NodeClass::kBoundaryAdjacent;
    g->inside_.push_back(k);
  }
  if (g->interior_count() == 0) throw GeometryError("empty interior");
  return g;
}

std::shared_ptr<const Grid2D> Grid2D::from_mask(int nx, int ny, double xmin, double ymin, double h,
                                                std::vector<bool> inside) {
  if (nx < 1 || ny < 1 || static_cast<int>(inside.size()) != nx * ny || !(h > 0.0))
    throw GeometryError("invalid mask grid");
  auto g = std::shared_ptr<Grid2D>(new Grid2D());
  g->nx_ = nx;
  g->ny_ = ny;
  g->h_ = h;
  g->xmin_ = xmin;
  g->ymin_ = ymin;
  const int N = nx * ny;
  g->cls_.assign(N, NodeClass::kExterior);
  g->theta_.assign(static_cast<std::size_t>(N) * 8, 1.0);
  for (int k = 0; k < N; ++k) {
    if (!inside[k]) continue;
    const int i = g->ix(k), j = g->jy(k);
    bool all = true;
    for (int d = 0; d < 4; ++d) {
      const int ii = i + kDirDx[d], jj = j + kDirDy[d];
      if (!(ii >= 0 && jj >= 0 && ii < nx && jj < ny && inside[g->index(ii, jj)])) all = false;
    }
    g->cls_[k] = all ? NodeClass::kInterior : NodeClass::kBoundaryAdjacent;
    g->inside_.push_back(k);
  }
  return g;
}

int Grid2D::neighbor(int k, int d) const {
  const int i = ix(k) + kDirDx[d], j = jy(k) + kDirDy[d];
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  const int nb = index(i, j);
  return inside(nb) ? nb : -1;
}

std::array<double, 2> Grid2D::crossing_point(int k, int d) const {
  const double t = theta(k, d) * h_;
  return {x(ix(k)) + kDirDx[d] * t, y(jy(k)) + kDirDy[d] * t};
}

bool Grid2D::full_stencil(int k) const {
  if (!inside(k)) return false;
  for (int d = 0; d < 8; ++d)
    if (neighbor(k, d) < 0) return false;
  return true;
}

bool Grid2D::full_interior(int k) const {
  if (node_class(k) != NodeClass::kInterior) return false;
  for (int d = 0; d < 8; ++d) {
    const int nb = neighbor(k, d);
    if (nb < 0 || node_class(nb) != NodeClass::kInterior) return false;
  }
  return true;
}

int Grid2D::interior_count() const {
  return static_cast<int>(std::count(cls_.begin(), cls_.end(), NodeClass::kInterior));
}

// ---------------------------------------------------------------------------
// SymMat

std::array<double, 2> SymMat::eigenvalues() const {
  const double m = 0.5 * (a11 + a22);
  const double r = std::hypot(0.5 * (a11 - a22), a12);
  return {m - r, m + r};
}

Vec2 SymMat::eigenvector(double lambda) const {
  // Pick the better conditioned of the two rows of (A - lambda I).
  double vx, vy;
  if (std::abs(a11 - lambda) > std::abs(a22 - lambda)) {
    vx = -a12;
    vy = a11 - lambda;
  } else {
    vx = a22 - lambda;
    vy = -a12;
  }
  const double nrm = std::hypot(vx, vy);
  if (nrm == 0.0) return (a11 >= a22) == (lambda >= 0.5 * (a11 + a22)) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  return {vx / nrm, vy / nrm};
}

// ---------------------------------------------------------------------------
// NodeField

template <class T>
NodeField<T>::NodeField(GridPtr grid, T fill) : grid_(std::move(grid)) {
  v_.assign(grid_->size(), nan_value<T>());
  for (int k : grid_->inside_nodes()) v_[k] = fill;
}

template <class T>
void NodeField<T>::check(int i, int j) const {
  if (i < 0 || j < 0 || i >= grid_->nx() || j >= grid_->ny())
    throw GeometryError("node index out of range");
  if (!grid_->inside(grid_->index(i, j))) throw GeometryError("read of EXTERIOR node");
}

template <class T>
const T& NodeField<T>::at(int i, int j) const {
  check(i, j);
  return v_[grid_->index(i, j)];
}

template <class T>
T& NodeField<T>::at(int i, int j) {
  check(i, j);
  return v_[grid_->index(i, j)];
}

template class NodeField<double>;
template class NodeField<Vec2>;
template class NodeField<SymMat>;

ScalarField sample(const GridPtr& grid, const PlaneFn& f) {
  ScalarField out(grid);
  for (int k : grid->inside_nodes()) out[k] = f(grid->x(grid->ix(k)), grid->y(grid->jy(k)));
  return out;
}

// ---------------------------------------------------------------------------
// Discrete calculus

namespace {

// Value and fractional step on one side of node k in direction d. Returns false
// when neither a node nor Dirichlet data is available.
bool side_value(const ScalarField& f, int k, int d, const BoundaryFn& bc, double& val, double& th) {
  const Grid2D& g = *f.grid();
  const int nb = g.neighbor(k, d);
  if (nb >= 0) {
    val = f[nb];
    th = 1.0;
    return true;
  }
  if (bc && g.domain()) {
    const auto p = g.crossing_point(k, d);
    val = (*bc)(p[0], p[1]);
    th = g.theta(k, d);
    return true;
  }
  return false;
}

// Derivative along the unnormalised step vector of direction d (d even).
double first_difference(const ScalarField& f, int k, int d, const BoundaryFn& bc) {
  const Grid2D& g = *f.grid();
  const double h = g.h();
  double vp, tp, vm, tm;
  const bool hp = side_value(f, k, d, bc, vp, tp);
  const bool hm = side_value(f, k, opposite(d), bc, vm, tm);
  const double f0 = f[k];
  if (hp && hm) {
    return (tm * tm * (vp - f0) - tp * tp * (vm - f0)) / (h * tp * tm * (tp + tm));
  }
  // One-sided, second order where two nodes are available.
  const int side = hp ? d : opposite(d);
  const double sgn = hp ? 1.0 : -1.0;
  const int n1 = g.neighbor(k, side);
  if (n1 >= 0) {
    const int n2 = g.neighbor(n1, side);
    if (n2 >= 0) return sgn * (-3.0 * f0 + 4.0 * f[n1] - f[n2]) / (2.0 * h);
    return sgn * (f[n1] - f0) / h;
  }
  if (hp) return (vp - f0) / (tp * h);
  if (hm) return -(vm - f0) / (tm * h);
  return 0.0;
}

}  // namespace

Stencil second_difference_stencil(const Grid2D& g, int k, int d, const BoundaryFn& bc) {
  const double h2 = g.h() * g.h();
  Stencil s;
  int np = g.neighbor(k, d), nm = g.neighbor(k, opposite(d));
  double tp = 1.0, tm = 1.0, vp = 0.0, vm = 0.0;
  const bool dirichlet = bc && g.domain();
  if (np < 0 && dirichlet) {
    const auto p = g.crossing_point(k, d);
    vp = (*bc)(p[0], p[1]);
    tp = g.theta(k, d);
  }
  if (nm < 0 && dirichlet) {
    const auto p = g.crossing_point(k, opposite(d));
    vm = (*bc)(p[0], p[1]);
    tm = g.theta(k, opposite(d));
  }
  const bool hp = np >= 0 || dirichlet, hm = nm >= 0 || dirichlet;
  if (hp && hm) {
    const double wp = 2.0 / (h2 * tp * (tp + tm)), wm = 2.0 / (h2 * tm * (tp + tm));
    s.node[0] = k;
    s.w[0] = -(wp + wm);
    if (np >= 0) {
      s.node[1] = np;
      s.w[1] = wp;
    } else {
      s.constant += wp * vp;
    }
    if (nm >= 0) {
      s.node[2] = nm;
      s.w[2] = wm;
    } else {
      s.constant += wm * vm;
    }
    return s;
  }
  // One-sided (first order) from the side that has two nodes.
  for (int side : {d, opposite(d)}) {
    const int n1 = g.neighbor(k, side);
    if (n1 < 0) continue;
    const int n2 = g.neighbor(n1, side);
    if (n2 < 0) continue;
    s.node = {k, n1, n2};
    s.w = {1.0 / h2, -2.0 / h2, 1.0 / h2};
    return s;
  }
  return s;
}

double second_difference(const ScalarField& f, int k, int d, const BoundaryFn& bc) {
  const Stencil s = second_difference_stencil(*f.grid(), k, d, bc);
  double acc = s.constant;
  for (int a = 0; a < 3; ++a)
    if (s.node[a] >= 0) acc += s.w[a] * f[s.node[a]];
  return acc;
}

VectorField gradient(const ScalarField& f, const BoundaryFn& bc) {
  VectorField out(f.grid());
  for (int k : f.grid()->inside_nodes()) out[k] = {first_difference(f, k, kE, bc), first_difference(f, k, kN, bc)};
  return out;
}

SymMat hessian_at(const ScalarField& f, int k, const BoundaryFn& bc) {
  const double sxx = second_difference(f, k, kE, bc);
  const double syy = second_difference(f, k, kN, bc);
  const double sne = second_difference(f, k, kNE, bc);
  const double sse = second_difference(f, k, kSE, bc);
  return {sxx, 0.25 * (sne - sse), syy};
}

SymMatField hessian(const ScalarField& f, const BoundaryFn& bc) {
  SymMatField out(f.grid());
  for (int k : f.grid()->inside_nodes()) out[k] = hessian_at(f, k, bc);
  return out;
}

SymMat cofactor(const SymMat& H) { return {H.a22, -H.a12, H.a11}; }

SymMatField cofactor(const SymMatField& H) {
  SymMatField out(H.grid());
  for (int k : H.grid()->inside_nodes()) out[k] = cofactor(H[k]);
  return out;
}

ScalarField divergence(const VectorField& v, DivergenceScheme scheme) {
  const GridPtr& grid = v.grid();
  if (scheme == DivergenceScheme::kStaggered) {
    CellField<Vec2> cells{grid, {}, {}};
    const int ncx = grid->nx() - 1, ncy = grid->ny() - 1;
    cells.v.assign(static_cast<std::size_t>(ncx) * ncy, Vec2{});
    cells.valid.assign(static_cast<std::size_t>(ncx) * ncy, false);
    for (int j = 0; j < ncy; ++j)
      for (int i = 0; i < ncx; ++i) {
        const int k00 = grid->index(i, j), k10 = k00 + 1, k01 = k00 + grid->nx(), k11 = k01 + 1;
        if (!(grid->inside(k00) && grid->inside(k10) && grid->inside(k01) && grid->inside(k11))) continue;
        const int c = j * ncx + i;
        cells.valid[c] = true;
        cells.v[c] = {0.25 * (v[k00].x + v[k10].x + v[k01].x + v[k11].x),
                      0.25 * (v[k00].y + v[k10].y + v[k01].y + v[k11].y)};
      }
    return cell_divergence(cells);
  }
  ScalarField out(grid);
  ScalarField vx(grid), vy(grid);
  for (int k : grid->inside_nodes()) {
    vx[k] = v[k].x;
    vy[k] = v[k].y;
  }
  for (int k : grid->inside_nodes())
    out[k] = first_difference(vx, k, kE, std::nullopt) + first_difference(vy, k, kN, std::nullopt);
  return out;
}

CellField<Vec2> cell_gradient(const ScalarField& f) {
  const GridPtr& grid = f.grid();
  const int ncx = grid->nx() - 1, ncy = grid->ny() - 1;
  const double h = grid->h();
  CellField<Vec2> out{grid, std::vector<Vec2>(static_cast<std::size_t>(ncx) * ncy),
                      std::vector<bool>(static_cast<std::size_t>(ncx) * ncy, false)};
  for (int j = 0; j < ncy; ++j)
    for (int i = 0; i < ncx; ++i) {
      const int k00 = grid->index(i, j), k10 = k00 + 1, k01 = k00 + grid->nx(), k11 = k01 + 1;
      if (!(grid->inside(k00) && grid->inside(k10) && grid->inside(k01) && grid->inside(k11))) continue;
      const int c = j * ncx + i;
      out.valid[c] = true;
      out.v[c] = {0.5 * ((f[k10] - f[k00]) + (f[k11] - f[k01])) / h,
                  0.5 * ((f[k01] - f[k00]) + (f[k11] - f[k10])) / h};
    }
  return out;
}

CellField<double> cell_mixed(const ScalarField& f) {
  const GridPtr& grid = f.grid();
  const int ncx = grid->nx() - 1, ncy = grid->ny() - 1;
  const double h2 = grid->h() * grid->h();
  CellField<double> out{grid, std::vector<double>(static_cast<std::size_t>(ncx) * ncy, 0.0),
                        std::vector<bool>(static_cast<std::size_t>(ncx) * ncy, false)};
  for (int j = 0; j < ncy; ++j)
    for (int i = 0; i < ncx; ++i) {
      const int k00 = grid->index(i, j), k10 = k00 + 1, k01 = k00 + grid->nx(), k11 = k01 + 1;
      if (!(grid->inside(k00) && grid->inside(k10) && grid->inside(k01) && grid->inside(k11))) continue;
      const int c = j * ncx + i;
      out.valid[c] = true;
      out.v[c] = (f[k11] - f[k10] - f[k01] + f[k00]) / h2;
    }
  return out;
}

ScalarField cell_divergence(const CellField<Vec2>& v) {
  const GridPtr& grid = v.grid;
  const int ncx = grid->nx() - 1;
  const double h = grid->h();
  ScalarField out(grid, 0.0);
  for (int k : grid->inside_nodes()) {
    const int i = grid->ix(k), j = grid->jy(k);
    double acc = 0.0;
    // Cells (i-1/2 +- 1/2, j-1/2 +- 1/2) with sign of the corner position.
    for (int cj = j - 1; cj <= j; ++cj)
      for (int ci = i - 1; ci <= i; ++ci) {
        if (ci < 0 || cj < 0 || ci >= ncx || cj >= grid->ny() - 1) continue;
        const int c = cj * ncx + ci;
        if (!v.valid[c]) continue;
        const double sx = (ci == i) ? 1.0 : -1.0;  // cell to the right of node
        const double sy = (cj == j) ? 1.0 : -1.0;
        acc += 0.5 * (sx * v.v[c].x + sy * v.v[c].y) / h;
      }
    out[k] = acc;
  }
  return out;
}

VectorField cofactor_divergence(const ScalarField& f) {
  const GridPtr& grid = f.grid();
  const double h = grid->h();
  const int ncx = grid->nx() - 1;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  VectorField out(grid, Vec2{nan, nan});
  ScalarField dxx(grid), dyy(grid);
  for (int k : grid->inside_nodes()) {
    dxx[k] = second_difference(f, k, kE, std::nullopt);
    dyy[k] = second_difference(f, k, kN, std::nullopt);
  }
  const CellField<double> mixed = cell_mixed(f);
  for (int k : grid->inside_nodes()) {
    if (!grid->full_stencil(k)) continue;
    const int i = grid->ix(k), j = grid->jy(k);
    auto u12 = [&](int ci, int cj) { return -mixed.v[cj * ncx + ci]; };
    // Row 1: D1 U11 + D2 U21 with U11 = f_yy at nodes and U21 at cells.
    const double d1_u11 = (dyy[grid->index(i + 1, j)] - dyy[grid->index(i - 1, j)]) / (2.0 * h);
    const double d2_u21 = ((u12(i, j) + u12(i - 1, j)) - (u12(i, j - 1) + u12(i - 1, j - 1))) / (2.0 * h);
    // Row 2: D1 U12 + D2 U22 with U22 = f_xx.
    const double d1_u12 = ((u12(i, j) + u12(i, j - 1)) - (u12(i - 1, j) + u12(i - 1, j - 1))) / (2.0 * h);
    const double d2_u22 = (dxx[grid->index(i, j + 1)] - dxx[grid->index(i, j - 1)]) / (2.0 * h);
    out[k] = {d1_u11 + d2_u21, d1_u12 + d2_u22};
  }
  return out;
}

double integrate(const ScalarField& f, Region region) {
  const GridPtr& grid = f.grid();
  const ConvexDomain* dom = grid->domain();
  if (region != Region::kOmega && (!dom || !dom->has_inner()))
    throw GeometryError("region OMEGA0 requested without inner_rho");
  const double h = grid->h();
  auto in_region = [&](double x, double y) {
    const bool in_omega = dom ? dom->rho(x, y) < 0.0 : true;
    if (!in_omega) return false;
    if (region == Region::kOmega) return true;
    const bool in0 = dom->inner_rho(x, y) < 0.0;
    return region == Region::kOmega0 ? in0 : !in0;
  };
  double total = 0.0;
  for (int j = 0; j + 1 < grid->ny(); ++j)
    for (int i = 0; i + 1 < grid->nx(); ++i) {
      const int ks[4] = {grid->index(i, j), grid->index(i + 1, j), grid->index(i, j + 1),
                         grid->index(i + 1, j + 1)};
      double sum = 0.0;
      int cnt = 0;
      for (int k : ks)
        if (grid->inside(k)) {
          sum += f[k];
          ++cnt;
        }
      if (cnt == 0) continue;
      double frac = 1.0;
      if (cnt < 4 || region != Region::kOmega) {
        int hits = 0;
        for (int b = 0; b < 4; ++b)
          for (int a = 0; a < 4; ++a)
            if (in_region(grid->x(i) + (a + 0.5) * h / 4.0, grid->y(j) + (b + 0.5) * h / 4.0)) ++hits;
        frac = hits / 16.0;
      }
      total += frac * h * h * sum / cnt;
    }
  return total;
}

double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (int k : f.grid()->inside_nodes()) m = std::max(m, std::abs(f[k]));
  return m;
}

}  // namespace abreu
