#pragma once

#include <array>
#include <string>
#include <vector>

namespace abreu {

/// Bounds recorded after a coupled solve; see apriori_check().
struct AprioriChecks {
  double sup_abs_u = 0.0;
  double sup_grad_u = 0.0;
  double min_det = 0.0;
  double max_det = 0.0;
  double min_w_interior = 0.0;
  double min_w_boundary = 0.0;
  bool grad_bound_ok = false;
  /// Node index (grid-linear) where |Du| is largest.
  int argmax_grad = -1;
};

struct SolveReport {
  int outer_iters = 0;
  /// Per iteration: (r_u, r_w) sup norms. Scalar solvers leave r_w = 0.
  std::vector<std::array<double, 2>> residual_history;
  double damping_used = 1.0;
  AprioriChecks apriori;
  double wallclock = 0.0;
  bool converged = false;
  /// Set when the w floor was active in the returned iterate.
  bool floor_active = false;
  /// Free-form note (stall reason, domain deviations, ...).
  std::string message;
};

}  // namespace abreu
