#pragma once

// Discrete Legendre and partial Legendre transforms and residuals of the dual
// equations, used as independent checks of primal solutions.

#include <array>
#include <stdexcept>
#include <vector>

#include "abreu/geometry.hpp"
#include "abreu/linearized_ma.hpp"

namespace abreu {

class NonConvexInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// det D^2u* <= 0 or w <= 0 where a residual needs it.
class DualDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// kDiscreteMax: u*(y) = max over inside nodes of x.y - u(x), exact for the
/// sampled data (piecewise linear in y). kSmoothMap: per grid line a quintic
/// spline of the data is conjugated by inverting its derivative, giving a
/// smooth u* suitable for the finite-difference residual verifiers.
enum class ConjugateMethod { kDiscreteMax, kSmoothMap };

struct LegendrePair {
  ScalarField primal;
  GridPtr dual_grid;
  ScalarField dual;
  ConjugateMethod method = ConjugateMethod::kDiscreteMax;
};

/// Conjugate on a square-celled dual grid over the box of gradient samples,
/// with `m` nodes along its longer side. kDiscreteMax masks the convex hull of
/// the gradient samples; kSmoothMap masks the points attained by both
/// derivative inversions. Throws NonConvexInput when assert_convex fails.
LegendrePair legendre_transform(const ScalarField& u, int m,
                                ConjugateMethod method = ConjugateMethod::kDiscreteMax,
                                const BoundaryFn& bc = std::nullopt);

/// sup over INTERIOR primal nodes of |(u*)*(x) - u(x)|, the biconjugate taken
/// in max form over the dual nodes.
double involution_error(const LegendrePair& pair);

/// max over dual (or any) sample nodes of x.y - f: the conjugate of the field
/// evaluated at every target point. Ties pick the node with the smallest
/// index.
std::vector<double> discrete_conjugate(const ScalarField& f, const std::vector<std::array<double, 2>>& targets);

/// sup over INTERIOR primal nodes x with Du(x) well inside the dual mask of
/// |det D^2u(x) det D^2u*(Du(x)) - 1|, D^2u* by finite differences on the dual
/// grid and bilinear interpolation.
double det_reciprocal_error(const LegendrePair& pair, const BoundaryFn& bc = std::nullopt);

struct PartialLegendrePair {
  ScalarField primal;
  GridPtr dual_grid;  // (xi, eta); eta rows coincide with primal rows
  ScalarField dual;
  /// x1 attaining the supremum at each dual node (NaN outside the mask).
  ScalarField x1;
  ConjugateMethod method = ConjugateMethod::kDiscreteMax;
};

/// Transform in x1 along each primal row onto a uniform xi grid of spacing h
/// spanning [min u_x1, max u_x1]; a dual node is kept when xi lies within the
/// row's range of u_x1. Throws NonConvexInput when u_x1x1 <= 0 at an inside node.
PartialLegendrePair partial_legendre(const ScalarField& u, ConjugateMethod method = ConjugateMethod::kDiscreteMax,
                                     const BoundaryFn& bc = std::nullopt);

/// Residual field on a dual grid, evaluated at `nodes`: those with a full 5x5
/// neighbourhood inside the mask whose primal preimage lies at distance
/// >= margin_fraction * (half the shorter bbox side) from the boundary. Fourth
/// differences amplify the boundary layer of a discrete solution's error, so
/// the verifiers work on a fixed interior subset.
struct DualResidual {
  ScalarField r;
  std::vector<int> nodes;
  double sup() const;
};

/// U*^ij D_ij s - F0_z(Du*, y.Du* - u*) det D^2u* with
/// s = (|y|^2 + delta)^(q/2)/q + log det D^2u*, on the smooth conjugate.
DualResidual lt_dual_residual(const ScalarField& u, double q, double delta, const F0zFn& F0z, int m,
                              const BoundaryFn& bc = std::nullopt, double margin_fraction = 0.2);

/// w w_xixi + w_etaeta - w_xi^2 - (2/w) w_eta^2 - w^2 f with w = -u_etaeta/u_xixi
/// and f from the partial transform, F0_z evaluated at (u_xi, eta, xi u_xi - u).
DualResidual plt_dual_residual(const ScalarField& u, double q, double delta, const F0zFn& F0z,
                               const BoundaryFn& bc = std::nullopt, double margin_fraction = 0.2);

/// w = -u_etaeta / u_xixi of a smooth partial transform at the nodes with a
/// full 3x3 neighbourhood (NaN elsewhere).
ScalarField partial_w(const PartialLegendrePair& pair);

}  // namespace abreu
