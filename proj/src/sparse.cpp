#include "abreu/sparse.hpp"

#include <regex>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace abreu {

DofMap::DofMap(const Grid2D& grid) : dof_(grid.size(), -1) {
  for (int k : grid.inside_nodes()) {
    dof_[k] = static_cast<int>(node_.size());
    node_.push_back(k);
  }
}

Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    const std::string msg = lu.lastErrorMessage();
    int pivot = -1;
    std::smatch m;
    if (std::regex_search(msg, m, std::regex("([0-9]+)"))) pivot = std::stoi(m[1]);
    throw SingularSystem("singular linear system: " + msg, pivot);
  }
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularSystem("linear solve failed", -1);
  return x;
}

}  // namespace abreu
