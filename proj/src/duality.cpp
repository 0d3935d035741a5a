#include "abreu/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <unsupported/Eigen/Splines>

#include "abreu/monge_ampere.hpp"

namespace abreu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// max_i (x_i s_j - f_i) for increasing xs and increasing slopes through the
// lower convex hull. arg receives the maximising index, smallest on ties.
void hull_conjugate(const std::vector<double>& xs, const std::vector<double>& fs, const std::vector<double>& slopes,
                    std::vector<double>& out, std::vector<int>* arg) {
  std::vector<int> hull;
  for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      // Drop b when it lies on or above the chord a-i.
      if ((fs[b] - fs[a]) * (xs[i] - xs[a]) >= (fs[i] - fs[a]) * (xs[b] - xs[a]))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  out.assign(slopes.size(), kNaN);
  if (arg) arg->assign(slopes.size(), -1);
  std::size_t k = 0;
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    const double s = slopes[j];
    while (k + 1 < hull.size()) {
      const int a = hull[k], b = hull[k + 1];
      if (fs[b] - fs[a] < s * (xs[b] - xs[a]))
        ++k;
      else
        break;
    }
    out[j] = xs[hull[k]] * s - fs[hull[k]];
    if (arg) (*arg)[j] = hull[k];
  }
}

struct TensorConjugate {
  std::vector<double> value;  // [b * n1 + a] for target (t1[a], t2[b])
  std::vector<int> arg;       // maximising node
};

// Conjugate of the inside samples of f at the tensor product t1 x t2 (both
// increasing): a pass along rows in x1, then along columns in x2.
TensorConjugate tensor_conjugate(const ScalarField& f, const std::vector<double>& t1, const std::vector<double>& t2) {
  const Grid2D& g = *f.grid();
  const std::size_t n1 = t1.size(), n2 = t2.size();
  std::vector<int> rows;
  std::vector<std::vector<double>> rv;
  std::vector<std::vector<int>> ra;
  for (int j = 0; j < g.ny(); ++j) {
    std::vector<double> xs, fs;
    std::vector<int> ks;
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.inside(i, j)) continue;
      xs.push_back(g.x(i));
      fs.push_back(f[g.index(i, j)]);
      ks.push_back(g.index(i, j));
    }
    if (xs.empty()) continue;
    std::vector<double> v;
    std::vector<int> a;
    hull_conjugate(xs, fs, t1, v, &a);
    for (int& idx : a) idx = ks[idx];
    rows.push_back(j);
    rv.push_back(std::move(v));
    ra.push_back(std::move(a));
  }
  TensorConjugate out;
  out.value.assign(n1 * n2, kNaN);
  out.arg.assign(n1 * n2, -1);
  if (rows.empty()) return out;
  std::vector<double> ys(rows.size()), gs(rows.size()), v;
  std::vector<int> a;
  for (std::size_t r = 0; r < rows.size(); ++r) ys[r] = g.y(rows[r]);
  for (std::size_t c = 0; c < n1; ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) gs[r] = -rv[r][c];
    hull_conjugate(ys, gs, t2, v, &a);
    for (std::size_t b = 0; b < n2; ++b) {
      out.value[b * n1 + c] = v[b];
      out.arg[b * n1 + c] = ra[a[b]][c];
    }
  }
  return out;
}

// Quintic interpolating spline of one grid line, parametrised by x.
class SmoothLine {
 public:
  SmoothLine(const std::vector<double>& xs, const std::vector<double>& fs) : x0_(xs.front()), len_(xs.back() - xs.front()) {
    const auto n = static_cast<Eigen::DenseIndex>(xs.size());
    Eigen::Matrix<double, 1, Eigen::Dynamic> pts(n);
    Eigen::Array<double, 1, Eigen::Dynamic> par(n);
    for (Eigen::DenseIndex i = 0; i < n; ++i) {
      pts(i) = fs[i];
      par(i) = (xs[i] - x0_) / len_;
    }
    spline_ = Eigen::SplineFitting<Spline>::Interpolate(pts, std::min<Eigen::DenseIndex>(5, n - 1), par);
  }

  // Value and first two x-derivatives.
  std::array<double, 3> eval(double x) const {
    const double t = std::clamp((x - x0_) / len_, 0.0, 1.0);
    const auto d = spline_.derivatives(t, 2);
    return {d(0, 0), d(0, 1) / len_, d(0, 2) / (len_ * len_)};
  }

  double lo() const { return x0_; }
  double hi() const { return x0_ + len_; }

  // x with S'(x) = s, by safeguarded Newton; nullopt when s is outside the
  // derivative range on the line.
  std::optional<double> invert(double s) const {
    double a = lo(), b = hi();
    double fa = eval(a)[1] - s, fb = eval(b)[1] - s;
    if (fa > 0.0 || fb < 0.0) return std::nullopt;
    double x = 0.5 * (a + b);
    for (int it = 0; it < 100; ++it) {
      const auto e = eval(x);
      const double r = e[1] - s;
      if (r == 0.0) return x;
      if (r < 0.0)
        a = x;
      else
        b = x;
      double nx = e[2] > 0.0 ? x - r / e[2] : 0.5 * (a + b);
      if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
      if (std::abs(nx - x) <= 1e-15 * (1.0 + std::abs(x)) || b - a <= 1e-15 * (1.0 + std::abs(x))) return nx;
      x = nx;
    }
    return x;
  }

 private:
  using Spline = Eigen::Spline<double, 1>;
  double x0_, len_;
  Spline spline_;
};

// Inside nodes of grid row j as (x, value, node).
struct Line {
  std::vector<double> xs, fs;
  std::vector<int> ks;
};

Line row_line(const ScalarField& f, int j) {
  const Grid2D& g = *f.grid();
  Line l;
  for (int i = 0; i < g.nx(); ++i) {
    if (!g.inside(i, j)) continue;
    l.xs.push_back(g.x(i));
    l.fs.push_back(f[g.index(i, j)]);
    l.ks.push_back(g.index(i, j));
  }
  return l;
}

std::vector<double> uniform(double lo, double h, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = lo + i * h;
  return t;
}

struct DualBox {
  double y1min, y2min, H;
  int n1, n2;
};

DualBox dual_box(const VectorField& Du, int m) {
  const Grid2D& g = *Du.grid();
  double a0 = std::numeric_limits<double>::infinity(), a1 = -a0, b0 = a0, b1 = -a0;
  for (int k : g.inside_nodes()) {
    a0 = std::min(a0, Du[k].x);
    a1 = std::max(a1, Du[k].x);
    b0 = std::min(b0, Du[k].y);
    b1 = std::max(b1, Du[k].y);
  }
  const double H = std::max(a1 - a0, b1 - b0) / (m - 1);
  if (!(H > 0.0)) throw NonConvexInput("legendre_transform: degenerate gradient range");
  const int n1 = static_cast<int>(std::floor((a1 - a0) / H + 1e-9)) + 1;
  const int n2 = static_cast<int>(std::floor((b1 - b0) / H + 1e-9)) + 1;
  return {a0, b0, H, n1, n2};
}

// Convex hull (counter-clockwise) of points, monotone chain.
std::vector<Vec2> convex_hull(std::vector<Vec2> p) {
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  const auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Vec2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  h.resize(k > 1 ? k - 1 : k);
  return h;
}

bool in_hull(const std::vector<Vec2>& h, double x, double y, double tol) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2& a = h[i];
    const Vec2& b = h[(i + 1) % h.size()];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double c = ex * (y - a.y) - ey * (x - a.x);
    if (c < -tol * std::hypot(ex, ey)) return false;
  }
  return true;
}

// Nodes of a mask grid whose (2r+1)^2 neighbourhood is inside.
std::vector<int> margin_nodes(const Grid2D& g, int r) {
  std::vector<int> out;
  for (int k : g.inside_nodes()) {
    const int i = g.ix(k), j = g.jy(k);
    bool ok = true;
    for (int b = -r; b <= r && ok; ++b)
      for (int a = -r; a <= r && ok; ++a) ok = g.inside(i + a, j + b);
    if (ok) out.push_back(k);
  }
  return out;
}

// Centered differences on a mask grid (caller guarantees the 3x3 neighbourhood).
struct Derivs {
  double f, f1, f2, f11, f22, f12;
};

Derivs centered(const ScalarField& f, int k) {
  const Grid2D& g = *f.grid();
  const int i = g.ix(k), j = g.jy(k);
  const double h = g.h();
  const auto v = [&](int a, int b) { return f[g.index(i + a, j + b)]; };
  return {v(0, 0),
          (v(1, 0) - v(-1, 0)) / (2 * h),
          (v(0, 1) - v(0, -1)) / (2 * h),
          (v(1, 0) - 2 * v(0, 0) + v(-1, 0)) / (h * h),
          (v(0, 1) - 2 * v(0, 0) + v(0, -1)) / (h * h),
          (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4 * h * h)};
}

void require_convex(const ScalarField& u, const BoundaryFn& bc) {
  const ConvexityCheck c = assert_convex(u, bc);
  if (!c.ok) throw NonConvexInput("legendre_transform: input is not convex (min eigenvalue " + std::to_string(c.min_eig) + ")");
}

LegendrePair max_legendre(const ScalarField& u, const DualBox& box, const VectorField& Du) {
  const Grid2D& g = *u.grid();
  std::vector<Vec2> pts;
  for (int k : g.inside_nodes()) pts.push_back(Du[k]);
  const std::vector<Vec2> hull = convex_hull(pts);
  const std::vector<double> t1 = uniform(box.y1min, box.H, box.n1), t2 = uniform(box.y2min, box.H, box.n2);
  const TensorConjugate tc = tensor_conjugate(u, t1, t2);
  std::vector<bool> mask(static_cast<std::size_t>(box.n1) * box.n2);
  for (int b = 0; b < box.n2; ++b)
    for (int a = 0; a < box.n1; ++a) mask[b * box.n1 + a] = hull.size() >= 3 && in_hull(hull, t1[a], t2[b], 1e-12 * box.H);
  LegendrePair p;
  p.primal = u;
  p.method = ConjugateMethod::kDiscreteMax;
  p.dual_grid = Grid2D::from_mask(box.n1, box.n2, box.y1min, box.y2min, box.H, mask);
  p.dual = ScalarField(p.dual_grid, kNaN);
  for (int k : p.dual_grid->inside_nodes()) p.dual[k] = tc.value[k];
  return p;
}

LegendrePair smooth_legendre(const ScalarField& u, const DualBox& box) {
  const Grid2D& g = *u.grid();
  const std::vector<double> t1 = uniform(box.y1min, box.H, box.n1), t2 = uniform(box.y2min, box.H, box.n2);
  // Pass 1: v[j][a] = sup_x1 (x1 t1[a] - u(x1, y_j)).
  std::vector<std::vector<double>> v(g.ny(), std::vector<double>(box.n1, kNaN));
  for (int j = 0; j < g.ny(); ++j) {
    const Line l = row_line(u, j);
    if (l.xs.size() < 4) continue;
    const SmoothLine s(l.xs, l.fs);
    for (int a = 0; a < box.n1; ++a)
      if (const auto x = s.invert(t1[a])) v[j][a] = *x * t1[a] - s.eval(*x)[0];
  }
  // Pass 2 along x2 over the longest run of rows attaining t1[a].
  std::vector<double> dual(static_cast<std::size_t>(box.n1) * box.n2, kNaN);
  for (int a = 0; a < box.n1; ++a) {
    int best0 = 0, best_len = 0;
    for (int j = 0; j < g.ny();) {
      if (std::isnan(v[j][a])) {
        ++j;
        continue;
      }
      int e = j;
      while (e < g.ny() && !std::isnan(v[e][a])) ++e;
      if (e - j > best_len) best0 = j, best_len = e - j;
      j = e;
    }
    if (best_len < 4) continue;
    std::vector<double> ys, gs;
    for (int j = best0; j < best0 + best_len; ++j) {
      ys.push_back(g.y(j));
      gs.push_back(-v[j][a]);
    }
    const SmoothLine s(ys, gs);
    for (int b = 0; b < box.n2; ++b)
      if (const auto y = s.invert(t2[b])) dual[b * box.n1 + a] = *y * t2[b] - s.eval(*y)[0];
  }
  std::vector<bool> mask(dual.size());
  for (std::size_t k = 0; k < dual.size(); ++k) mask[k] = !std::isnan(dual[k]);
  LegendrePair p;
  p.primal = u;
  p.method = ConjugateMethod::kSmoothMap;
  p.dual_grid = Grid2D::from_mask(box.n1, box.n2, box.y1min, box.y2min, box.H, mask);
  p.dual = ScalarField(p.dual_grid, kNaN);
  for (int k : p.dual_grid->inside_nodes()) p.dual[k] = dual[k];
  return p;
}

// Bilinear interpolation of f at (x, y); nullopt unless all four corners hold
// finite values.
std::optional<double> bilinear(const ScalarField& f, double x, double y) {
  const Grid2D& g = *f.grid();
  const double s = (x - g.xmin()) / g.h(), t = (y - g.ymin()) / g.h();
  const int i = static_cast<int>(std::floor(s)), j = static_cast<int>(std::floor(t));
  if (i < 0 || j < 0 || i + 1 >= g.nx() || j + 1 >= g.ny()) return std::nullopt;
  const double c[4] = {f[g.index(i, j)], f[g.index(i + 1, j)], f[g.index(i, j + 1)], f[g.index(i + 1, j + 1)]};
  for (double v : c)
    if (!std::isfinite(v)) return std::nullopt;
  const double fs = s - i, ft = t - j;
  return (1 - fs) * (1 - ft) * c[0] + fs * (1 - ft) * c[1] + (1 - fs) * ft * c[2] + fs * ft * c[3];
}

// True when the disc of radius d around (x, y) lies in the domain (sampled on
// its rim). Grids without a domain accept everything.
class InteriorTest {
 public:
  InteriorTest(const Grid2D& g, double fraction) : dom_(g.domain()) {
    if (dom_) {
      const BBox& b = dom_->bbox();
      d_ = fraction * 0.5 * std::min(b.xmax - b.xmin, b.ymax - b.ymin);
    }
  }
  bool operator()(double x, double y) const {
    if (!dom_) return true;
    if (!(dom_->rho(x, y) < 0.0)) return false;
    constexpr int kRim = 16;
    for (int i = 0; i < kRim; ++i) {
      const double t = 2.0 * M_PI * i / kRim;
      if (!(dom_->rho(x + d_ * std::cos(t), y + d_ * std::sin(t)) < 0.0)) return false;
    }
    return true;
  }

 private:
  const ConvexDomain* dom_;
  double d_ = 0.0;
};

}  // namespace

LegendrePair legendre_transform(const ScalarField& u, int m, ConjugateMethod method, const BoundaryFn& bc) {
  if (m < 3) throw std::invalid_argument("legendre_transform: dual resolution must be >= 3");
  require_convex(u, bc);
  const VectorField Du = gradient(u, bc);
  const DualBox box = dual_box(Du, m);
  return method == ConjugateMethod::kDiscreteMax ? max_legendre(u, box, Du) : smooth_legendre(u, box);
}

std::vector<double> discrete_conjugate(const ScalarField& f, const std::vector<std::array<double, 2>>& targets) {
  std::vector<double> t1, t2;
  for (const auto& t : targets) {
    t1.push_back(t[0]);
    t2.push_back(t[1]);
  }
  const auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(t1);
  uniq(t2);
  const TensorConjugate tc = tensor_conjugate(f, t1, t2);
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    const auto a = std::lower_bound(t1.begin(), t1.end(), t[0]) - t1.begin();
    const auto b = std::lower_bound(t2.begin(), t2.end(), t[1]) - t2.begin();
    out.push_back(tc.value[b * t1.size() + a]);
  }
  return out;
}

double involution_error(const LegendrePair& pair) {
  const Grid2D& g = *pair.primal.grid();
  std::vector<std::array<double, 2>> targets;
  std::vector<int> nodes;
  for (int k : g.inside_nodes()) {
    if (g.node_class(k) != NodeClass::kInterior) continue;
    targets.push_back({g.x(g.ix(k)), g.y(g.jy(k))});
    nodes.push_back(k);
  }
  const std::vector<double> bi = discrete_conjugate(pair.dual, targets);
  double e = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) e = std::max(e, std::abs(bi[i] - pair.primal[nodes[i]]));
  return e;
}

double det_reciprocal_error(const LegendrePair& pair, const BoundaryFn& bc) {
  const Grid2D& dg = *pair.dual_grid;
  ScalarField ddet(pair.dual_grid, kNaN);
  for (int k : margin_nodes(dg, 1)) {
    const Derivs d = centered(pair.dual, k);
    ddet[k] = d.f11 * d.f22 - d.f12 * d.f12;
  }
  const Grid2D& g = *pair.primal.grid();
  const VectorField Du = gradient(pair.primal, bc);
  double e = 0.0;
  for (int k : g.inside_nodes()) {
    if (g.node_class(k) != NodeClass::kInterior) continue;
    const auto dd = bilinear(ddet, Du[k].x, Du[k].y);
    if (!dd) continue;
    e = std::max(e, std::abs(hessian_at(pair.primal, k, bc).det() * *dd - 1.0));
  }
  return e;
}

PartialLegendrePair partial_legendre(const ScalarField& u, ConjugateMethod method, const BoundaryFn& bc) {
  const Grid2D& g = *u.grid();
  for (int k : g.inside_nodes())
    if (g.node_class(k) == NodeClass::kInterior && !(second_difference(u, k, kE, bc) > 0.0))
      throw NonConvexInput("partial_legendre: u_x1x1 is not positive");
  const VectorField Du = gradient(u, bc);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k : g.inside_nodes()) {
    lo = std::min(lo, Du[k].x);
    hi = std::max(hi, Du[k].x);
  }
  const double h = g.h();
  const int nxi = static_cast<int>(std::floor((hi - lo) / h + 1e-9)) + 1;
  const std::vector<double> xi = uniform(lo, h, nxi);
  std::vector<double> val(static_cast<std::size_t>(nxi) * g.ny(), kNaN), arg(val.size(), kNaN);
  for (int j = 0; j < g.ny(); ++j) {
    const Line l = row_line(u, j);
    if (l.xs.size() < 4) continue;
    if (method == ConjugateMethod::kDiscreteMax) {
      double rlo = std::numeric_limits<double>::infinity(), rhi = -rlo;
      for (int k : l.ks) {
        rlo = std::min(rlo, Du[k].x);
        rhi = std::max(rhi, Du[k].x);
      }
      std::vector<double> v;
      std::vector<int> a;
      hull_conjugate(l.xs, l.fs, xi, v, &a);
      for (int c = 0; c < nxi; ++c) {
        if (xi[c] < rlo || xi[c] > rhi) continue;
        val[j * nxi + c] = v[c];
        arg[j * nxi + c] = l.xs[a[c]];
      }
    } else {
      const SmoothLine s(l.xs, l.fs);
      for (int c = 0; c < nxi; ++c) {
        if (const auto x = s.invert(xi[c])) {
          val[j * nxi + c] = *x * xi[c] - s.eval(*x)[0];
          arg[j * nxi + c] = *x;
        }
      }
    }
  }
  std::vector<bool> mask(val.size());
  for (std::size_t k = 0; k < val.size(); ++k) mask[k] = !std::isnan(val[k]);
  PartialLegendrePair p;
  p.primal = u;
  p.method = method;
  p.dual_grid = Grid2D::from_mask(nxi, g.ny(), lo, g.ymin(), h, mask);
  p.dual = ScalarField(p.dual_grid, kNaN);
  p.x1 = ScalarField(p.dual_grid, kNaN);
  for (int k : p.dual_grid->inside_nodes()) {
    p.dual[k] = val[k];
    p.x1[k] = arg[k];
  }
  return p;
}

double DualResidual::sup() const {
  double m = 0.0;
  for (int k : nodes) m = std::max(m, std::abs(r[k]));
  return m;
}

DualResidual lt_dual_residual(const ScalarField& u, double q, double delta, const F0zFn& F0z, int m,
                              const BoundaryFn& bc, double margin_fraction) {
  if (!(q > 1.0) || delta < 0.0) throw std::invalid_argument("lt_dual_residual: need q > 1, delta >= 0");
  const LegendrePair p = legendre_transform(u, m, ConjugateMethod::kSmoothMap, bc);
  const Grid2D& dg = *p.dual_grid;
  const InteriorTest interior(*u.grid(), margin_fraction);
  DualResidual out{ScalarField(p.dual_grid, kNaN), {}};
  for (int k : margin_nodes(dg, 2)) {
    const Derivs d = centered(p.dual, k);
    if (interior(d.f1, d.f2)) out.nodes.push_back(k);
  }
  ScalarField s(p.dual_grid, kNaN);
  for (int k : margin_nodes(dg, 1)) {
    const Derivs d = centered(p.dual, k);
    const double det = d.f11 * d.f22 - d.f12 * d.f12;
    const double y1 = dg.x(dg.ix(k)), y2 = dg.y(dg.jy(k));
    if (det > 0.0) s[k] = std::pow(y1 * y1 + y2 * y2 + delta, 0.5 * q) / q + std::log(det);
  }
  for (int k : out.nodes) {
    const Derivs d = centered(p.dual, k);
    const double det = d.f11 * d.f22 - d.f12 * d.f12;
    if (!(det > 0.0)) throw DualDegenerate("lt_dual_residual: det D^2u* <= 0 at a dual node");
    const Derivs ds = centered(s, k);
    const double y1 = dg.x(dg.ix(k)), y2 = dg.y(dg.jy(k));
    const double lhs = d.f22 * ds.f11 - 2.0 * d.f12 * ds.f12 + d.f11 * ds.f22;
    out.r[k] = lhs - F0z(d.f1, d.f2, y1 * d.f1 + y2 * d.f2 - d.f) * det;
  }
  return out;
}

ScalarField partial_w(const PartialLegendrePair& pair) {
  ScalarField w(pair.dual_grid, kNaN);
  for (int k : margin_nodes(*pair.dual_grid, 1)) {
    const Derivs d = centered(pair.dual, k);
    w[k] = -d.f22 / d.f11;
  }
  return w;
}

DualResidual plt_dual_residual(const ScalarField& u, double q, double delta, const F0zFn& F0z, const BoundaryFn& bc,
                               double margin_fraction) {
  if (!(q > 1.0) || delta < 0.0) throw std::invalid_argument("plt_dual_residual: need q > 1, delta >= 0");
  const PartialLegendrePair p = partial_legendre(u, ConjugateMethod::kSmoothMap, bc);
  const Grid2D& dg = *p.dual_grid;
  const ScalarField w = partial_w(p);
  const InteriorTest interior(*u.grid(), margin_fraction);
  DualResidual out{ScalarField(p.dual_grid, kNaN), {}};
  for (int k : margin_nodes(dg, 2))
    if (interior(p.x1[k], dg.y(dg.jy(k)))) out.nodes.push_back(k);
  for (int k : out.nodes) {
    const Derivs d = centered(p.dual, k);
    const Derivs dw = centered(w, k);
    if (!(dw.f > 0.0)) throw DualDegenerate("plt_dual_residual: w <= 0 at a dual node");
    const double xi = dg.x(dg.ix(k)), eta = dg.y(dg.jy(k));
    const double P = xi * xi + d.f2 * d.f2 + delta;
    const double c = xi + d.f2 * d.f12;
    double f = std::pow(P, 0.5 * q - 1.0) * (1.0 + d.f12 * d.f12 - d.f22 * d.f11);
    if (q != 2.0) f += (q - 2.0) * std::pow(P, 0.5 * q - 2.0) * (c * c - d.f2 * d.f2 * d.f11 * d.f22);
    f -= F0z(d.f1, eta, xi * d.f1 - d.f) * d.f11;
    const double lhs = dw.f * dw.f11 + dw.f22 - dw.f1 * dw.f1 - 2.0 / dw.f * dw.f2 * dw.f2;
    out.r[k] = lhs - dw.f * dw.f * f;
  }
  return out;
}

}  // namespace abreu
