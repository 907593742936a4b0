#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "graphssl/graph.hpp"

namespace graphssl {

// Unnormalized graph Laplacian L = D - W with D_ii = sum_j W_ij.
// Immutable after construction; L and W are kept sparse since kNN graphs
// carry O(kn) edges.
class GraphLaplacian {
 public:
  GraphLaplacian(Eigen::SparseMatrix<double> laplacian,
                 Eigen::SparseMatrix<double> weights, Eigen::VectorXd degrees);

  Eigen::Index size() const { return degrees_.size(); }
  const Eigen::SparseMatrix<double>& matrix() const { return laplacian_; }
  const Eigen::SparseMatrix<double>& weights() const { return weights_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }
  double max_degree() const;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(laplacian_); }

 private:
  Eigen::SparseMatrix<double> laplacian_;
  Eigen::SparseMatrix<double> weights_;
  Eigen::VectorXd degrees_;
};

GraphLaplacian build_laplacian(const AffinityGraph& graph);

// For externally assembled weight matrices; rejects asymmetric input,
// negative weights and nonzero diagonals.
GraphLaplacian build_laplacian(const Eigen::MatrixXd& W);

// Tr(V^T L V), clamped at zero for round-off. V holds one row per node.
double smoothness(const Eigen::MatrixXd& V, const GraphLaplacian& lap);

}  // namespace graphssl
