#pragma once

// Thin wrapper over Eigen's sparse LU used by every linear solve.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "abreu/geometry.hpp"

namespace abreu {

class SingularSystem : public std::runtime_error {
 public:
  SingularSystem(const std::string& what, int pivot) : std::runtime_error(what), pivot_(pivot) {}
  /// Unknown index where factorization broke down (-1 if unknown).
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Numbering of the inside nodes of a grid as linear-system unknowns.
class DofMap {
 public:
  explicit DofMap(const Grid2D& grid);
  int size() const { return static_cast<int>(node_.size()); }
  /// Unknown id of node k, or -1 for EXTERIOR nodes.
  int dof(int k) const { return dof_[k]; }
  int node(int d) const { return node_[d]; }

 private:
  std::vector<int> dof_;
  std::vector<int> node_;
};

/// Factorizes and solves A x = b with a deterministic sparse LU.
Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b);

}  // namespace abreu
