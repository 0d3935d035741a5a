#pragma once

// Convex planar domains, uniform Cartesian grids with Shortley-Weller boundary
// offsets, node-indexed fields, and second-order discrete calculus.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace abreu {

/// Thrown on contract violations of the geometry layer (empty interior, reads
/// of EXTERIOR nodes, missing inner region, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PlaneFn = std::function<double(double, double)>;

struct BBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
};

/// A planar region {rho < 0}. The optional inner function describes the
/// nested region Omega_0 used by the Rochet-Chone problems.
class ConvexDomain {
 public:
  ConvexDomain(PlaneFn rho, BBox bbox, std::string name = "custom");

  static ConvexDomain disk(double r = 1.0, double cx = 0.0, double cy = 0.0);
  /// max(|x - cx|, |y - cy|) - a.
  static ConvexDomain square(double a = 1.0, double cx = 0.0, double cy = 0.0);
  /// |x|^p + |y|^p - 1, p >= 2.
  static ConvexDomain superellipse(double p);

  ConvexDomain with_inner(PlaneFn inner_rho, std::string inner_name = "custom") const;
  ConvexDomain with_inner_box(double x0, double x1, double y0, double y1) const;

  double rho(double x, double y) const { return rho_(x, y); }
  bool has_inner() const { return static_cast<bool>(inner_rho_); }
  double inner_rho(double x, double y) const;
  const BBox& bbox() const { return bbox_; }
  const std::string& name() const { return name_; }
  const std::string& inner_name() const { return inner_name_; }

  /// Samples `count` random interior pairs and checks midpoint membership.
  bool sampled_convexity(int count, std::uint64_t seed) const;
  /// Minimum of -rho over sampled inner points (positive means Omega_0 is
  /// compactly contained with that margin). Requires an inner region.
  double inner_margin(int samples_per_axis) const;

 private:
  PlaneFn rho_;
  PlaneFn inner_rho_;
  BBox bbox_;
  std::string name_;
  std::string inner_name_;
};

enum class NodeClass : std::uint8_t { kInterior, kBoundaryAdjacent, kExterior };

/// The eight stencil directions. Axis directions first, then the two
/// diagonals (each as a +/- pair).
enum Dir : int { kE = 0, kW, kN, kS, kNE, kSW, kSE, kNW };
inline constexpr std::array<int, 8> kDirDx = {1, -1, 0, 0, 1, -1, 1, -1};
inline constexpr std::array<int, 8> kDirDy = {0, 0, 1, -1, 1, -1, -1, 1};
inline constexpr int opposite(int d) { return d ^ 1; }

/// Uniform grid over a domain's bounding box. Node index k = j * nx + i.
class Grid2D {
 public:
  /// Builds the grid with n nodes per axis over the (square-padded) bbox.
  static std::shared_ptr<const Grid2D> build(const ConvexDomain& domain, int n);
  /// Builds a grid with an explicit inside mask (dual grids). No crossings are
  /// located; missing neighbours simply have no value.
  static std::shared_ptr<const Grid2D> from_mask(int nx, int ny, double xmin, double ymin,
                                                 double h, std::vector<bool> inside);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double h() const { return h_; }
  double xmin() const { return xmin_; }
  double ymin() const { return ymin_; }
  double xmax() const { return xmin_ + (nx_ - 1) * h_; }
  double ymax() const { return ymin_ + (ny_ - 1) * h_; }
  double x(int i) const { return xmin_ + i * h_; }
  double y(int j) const { return ymin_ + j * h_; }
  int index(int i, int j) const { return j * nx_ + i; }
  int ix(int k) const { return k % nx_; }
  int jy(int k) const { return k / nx_; }

  NodeClass node_class(int k) const { return cls_[k]; }
  bool inside(int k) const { return cls_[k] != NodeClass::kExterior; }
  bool inside(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx_ && j < ny_ && inside(index(i, j));
  }
  /// Neighbour index in direction d, or -1 when off-grid or EXTERIOR.
  int neighbor(int k, int d) const;
  /// Fractional distance (0,1] to the rho=0 crossing in direction d, or 1 when
  /// the neighbour is inside. Only meaningful for inside nodes.
  double theta(int k, int d) const { return theta_[static_cast<std::size_t>(k) * 8 + d]; }
  /// True when direction d leaves the domain before reaching the neighbour
  /// (a Dirichlet crossing exists).
  bool crosses(int k, int d) const { return neighbor(k, d) < 0 && has_domain_; }
  /// Coordinates of the crossing point in direction d.
  std::array<double, 2> crossing_point(int k, int d) const;

  /// All eight neighbours inside (3x3 neighbourhood free of EXTERIOR nodes).
  bool full_stencil(int k) const;
  /// Every node of the 3x3 neighbourhood is INTERIOR.
  bool full_interior(int k) const;

  const std::vector<int>& inside_nodes() const { return inside_; }
  int interior_count() const;
  const ConvexDomain* domain() const { return has_domain_ ? &domain_ : nullptr; }

 private:
  Grid2D() : domain_(ConvexDomain::disk()) {}

  int nx_ = 0, ny_ = 0;
  double h_ = 0.0, xmin_ = 0.0, ymin_ = 0.0;
  std::vector<NodeClass> cls_;
  std::vector<double> theta_;
  std::vector<int> inside_;
  ConvexDomain domain_;
  bool has_domain_ = false;
};

using GridPtr = std::shared_ptr<const Grid2D>;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

/// Symmetric 2x2 matrix; the off-diagonal entry is stored once.
struct SymMat {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  double det() const { return a11 * a22 - a12 * a12; }
  double trace() const { return a11 + a22; }
  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const;
  /// Unit eigenvector for eigenvalue lambda.
  Vec2 eigenvector(double lambda) const;
};

/// Node-indexed container. EXTERIOR nodes hold NaN and may not be read
/// through the checked accessors.
template <class T>
class NodeField {
 public:
  NodeField() = default;
  explicit NodeField(GridPtr grid, T fill = T{});

  const GridPtr& grid() const { return grid_; }
  int size() const { return static_cast<int>(v_.size()); }

  T& operator[](int k) { return v_[k]; }
  const T& operator[](int k) const { return v_[k]; }
  /// Checked read: throws GeometryError on EXTERIOR nodes.
  const T& at(int i, int j) const;
  T& at(int i, int j);

  std::vector<T>& values() { return v_; }
  const std::vector<T>& values() const { return v_; }

 private:
  void check(int i, int j) const;

  GridPtr grid_;
  std::vector<T> v_;
};

using ScalarField = NodeField<double>;
using VectorField = NodeField<Vec2>;
using SymMatField = NodeField<SymMat>;

/// Samples f at every inside node.
ScalarField sample(const GridPtr& grid, const PlaneFn& f);

/// Optional Dirichlet data used by the Shortley-Weller boundary rows.
using BoundaryFn = std::optional<PlaneFn>;

/// Linear form sum_i w[i] * f[node[i]] + constant. Unused slots have node -1.
struct Stencil {
  std::array<int, 3> node = {-1, -1, -1};
  std::array<double, 3> w = {0.0, 0.0, 0.0};
  double constant = 0.0;
};

/// Weights of the Shortley-Weller second difference along direction d at inside
/// node k (approximates d^T D^2 f d for the unnormalised step vector d). Dirichlet
/// values enter the constant; without data, one-sided interior differences.
Stencil second_difference_stencil(const Grid2D& grid, int k, int d, const BoundaryFn& bc);
double second_difference(const ScalarField& f, int k, int d, const BoundaryFn& bc);

VectorField gradient(const ScalarField& f, const BoundaryFn& bc = std::nullopt);
SymMat hessian_at(const ScalarField& f, int k, const BoundaryFn& bc);
SymMatField hessian(const ScalarField& f, const BoundaryFn& bc = std::nullopt);
SymMatField cofactor(const SymMatField& H);
SymMat cofactor(const SymMat& H);

enum class DivergenceScheme { kCentered, kStaggered };
ScalarField divergence(const VectorField& v, DivergenceScheme scheme = DivergenceScheme::kCentered);

/// Values at cell centres (i + 1/2, j + 1/2); cell c = j * (nx - 1) + i.
/// A cell is valid when all four corners are inside nodes.
template <class T>
struct CellField {
  GridPtr grid;
  std::vector<T> v;
  std::vector<bool> valid;
};

/// Cell-centred gradient from the four corner values.
CellField<Vec2> cell_gradient(const ScalarField& f);
/// Compact mixed difference D1+D2+ f at each valid cell.
CellField<double> cell_mixed(const ScalarField& f);
/// Node divergence of a cell vector field (negative transpose of cell_gradient).
/// Invalid cells contribute zero.
ScalarField cell_divergence(const CellField<Vec2>& v);

/// Row-wise divergence of the cofactor of the discrete Hessian, with the
/// diagonal cofactor entries at nodes and the off-diagonal entry at cell
/// centres (its nodal average is the 4-point cross stencil). Evaluated at
/// nodes with a full stencil; other nodes are NaN.
VectorField cofactor_divergence(const ScalarField& f);

enum class Region { kOmega, kOmega0, kOmegaMinusOmega0 };

/// Cell midpoint rule with cut cells weighted by a 4x4 sampled inside fraction.
double integrate(const ScalarField& f, Region region = Region::kOmega);

/// Maximum |f| over the given nodes (convenience for norms).
double sup_norm(const ScalarField& f);

}  // namespace abreu
