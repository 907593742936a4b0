#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphssl/dataset.hpp"
#include "graphssl/metric.hpp"

namespace graphssl {

using PatternMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class GraphKind { Learned, LabelWeight, UnsupervisedGaussian };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& s);

// Symmetric nonnegative affinity over n samples with zero diagonal.
// Weights are stored dense up to kDenseStorageLimit samples and as sparse
// triplets above it; the full adjacency A and sparsification pattern P are
// retained only in dense storage.
class AffinityGraph {
 public:
  static constexpr Eigen::Index kDenseStorageLimit = 4096;

  static AffinityGraph dense(Eigen::MatrixXd W, Eigen::MatrixXd A,
                             PatternMatrix P, double sigma, GraphKind kind,
                             int knn_k);
  static AffinityGraph sparse(Eigen::Index n,
                              std::vector<Eigen::Triplet<double>> upper,
                              double sigma, GraphKind kind, int knn_k);
  // Wraps an externally built weight matrix. Validates symmetry, zero
  // diagonal and nonnegativity; the pattern is derived from the nonzeros and
  // no adjacency is retained.
  static AffinityGraph from_weights(Eigen::MatrixXd W, GraphKind kind,
                                    double sigma = 0.0);

  Eigen::Index size() const { return n_; }
  double sigma() const { return sigma_; }
  GraphKind kind() const { return kind_; }
  int knn_k() const { return knn_k_; }
  bool dense_storage() const { return dense_storage_; }
  bool has_adjacency() const { return adjacency_.size() > 0; }

  const Eigen::MatrixXd& weights() const;    // dense storage only
  const Eigen::MatrixXd& adjacency() const;  // dense storage only
  const PatternMatrix& pattern() const;      // dense storage only

  // Available in either storage mode.
  Eigen::SparseMatrix<double> weights_sparse() const;
  Eigen::VectorXd degrees() const;
  double weight(Eigen::Index i, Eigen::Index j) const;
  Eigen::Index edge_count() const;  // undirected edges with nonzero weight
  // Nonzero upper-triangle entries ordered by (i, j).
  std::vector<Eigen::Triplet<double>> upper_triplets() const;

 private:
  AffinityGraph() = default;

  Eigen::Index n_ = 0;
  double sigma_ = 0.0;  // 0 when no Gaussian weighting was applied
  GraphKind kind_ = GraphKind::UnsupervisedGaussian;
  int knn_k_ = 0;  // 0 when the graph was not built by kNN sparsification
  bool dense_storage_ = true;

  Eigen::MatrixXd weights_;    // dense mode
  Eigen::MatrixXd adjacency_;  // dense mode, may be empty for loaded graphs
  PatternMatrix pattern_;      // dense mode
  Eigen::SparseMatrix<double> weights_sp_;  // sparse mode
};

// A_ij = metric_distance_sq(M, x_i, x_j); symmetric with zero diagonal.
// Requires at least two samples.
Eigen::MatrixXd full_adjacency(const Eigen::MatrixXd& X, const MetricMatrix& M);
Eigen::MatrixXd full_adjacency(const DataSet& ds, const MetricMatrix& M);

// Per-row selection of the k nearest neighbors (smallest A_ij, j != i), ties
// broken by smaller column index. Exactly k ones per row.
PatternMatrix knn_row_selection(const Eigen::MatrixXd& A, int k);

// knn_row_selection followed by symmetrization P = max(P, P^T).
PatternMatrix knn_sparsify(const Eigen::MatrixXd& A, int k);

// sigma = sum_ij A_ij^2 / n^2. Throws on an all-zero adjacency.
double default_bandwidth(const Eigen::MatrixXd& A);

// W_ij = P_ij * exp(-A_ij / (2 sigma^2)).
AffinityGraph gaussian_reweight(const PatternMatrix& P,
                                const Eigen::MatrixXd& A, double sigma,
                                GraphKind kind = GraphKind::UnsupervisedGaussian,
                                int knn_k = 0);

// Binary graph connecting labeled samples with equal labels; unlabeled
// samples have no edges.
AffinityGraph label_weight_graph(const DataSet& ds);

// Full pipeline under an explicit metric: adjacency, kNN sparsification,
// bandwidth (or override), Gaussian reweighting. Switches to sparse storage
// above AffinityGraph::kDenseStorageLimit without materializing A.
AffinityGraph metric_gaussian_graph(const Eigen::MatrixXd& X,
                                    const MetricMatrix& M, int knn_k,
                                    std::optional<double> sigma_override,
                                    GraphKind kind);

// Pipeline with the identity metric.
AffinityGraph unsupervised_gaussian_graph(
    const DataSet& ds, int knn_k, std::optional<double> sigma_override = {});

// Pipeline with a KISS metric learned from the labeled prefix.
AffinityGraph build_learned_graph(const DataSet& ds, int knn_k,
                                  double kiss_regularization = 1e-3,
                                  std::optional<double> sigma_override = {});

// Triplet text format: header "n=..,k=..,sigma=..,kind=..", then one
// "i,j,w" line per nonzero upper-triangle entry. Round-trips bit-exactly.
void save_graph(const AffinityGraph& g, const std::string& path);
AffinityGraph load_graph(const std::string& path);

}  // namespace graphssl
