#include "graphssl/laplacian.hpp"

#include <vector>

#include "graphssl/errors.hpp"

namespace graphssl {

namespace {

GraphLaplacian from_weight_triplets(
    Eigen::Index n, const std::vector<Eigen::Triplet<double>>& weight_trips) {
  Eigen::VectorXd degrees = Eigen::VectorXd::Zero(n);
  for (const auto& t : weight_trips) degrees(t.row()) += t.value();

  std::vector<Eigen::Triplet<double>> lap_trips;
  lap_trips.reserve(weight_trips.size() + static_cast<std::size_t>(n));
  for (const auto& t : weight_trips) {
    lap_trips.emplace_back(t.row(), t.col(), -t.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    lap_trips.emplace_back(static_cast<int>(i), static_cast<int>(i),
                           degrees(i));
  }

  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(lap_trips.begin(), lap_trips.end());
  L.makeCompressed();
  Eigen::SparseMatrix<double> W(n, n);
  W.setFromTriplets(weight_trips.begin(), weight_trips.end());
  W.makeCompressed();
  return GraphLaplacian(std::move(L), std::move(W), std::move(degrees));
}

}  // namespace

GraphLaplacian::GraphLaplacian(Eigen::SparseMatrix<double> laplacian,
                               Eigen::SparseMatrix<double> weights,
                               Eigen::VectorXd degrees)
    : laplacian_(std::move(laplacian)),
      weights_(std::move(weights)),
      degrees_(std::move(degrees)) {}

double GraphLaplacian::max_degree() const {
  return degrees_.size() > 0 ? degrees_.maxCoeff() : 0.0;
}

GraphLaplacian build_laplacian(const AffinityGraph& graph) {
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& t : graph.upper_triplets()) {
    trips.emplace_back(t.row(), t.col(), t.value());
    trips.emplace_back(t.col(), t.row(), t.value());
  }
  return from_weight_triplets(graph.size(), trips);
}

GraphLaplacian build_laplacian(const Eigen::MatrixXd& W) {
  const Eigen::Index n = W.rows();
  if (n == 0 || W.cols() != n) {
    throw std::invalid_argument("affinity must be square and nonempty");
  }
  if ((W.array() != W.transpose().array()).any()) {
    throw DataError(DataError::Code::Generic, "affinity not symmetric");
  }
  if ((W.array() < 0.0).any()) {
    throw DataError(DataError::Code::Generic, "affinity has negative weights");
  }
  if (W.diagonal().any()) {
    throw DataError(DataError::Code::Generic, "affinity has nonzero diagonal");
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (W(i, j) != 0.0) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), W(i, j));
      }
    }
  }
  return from_weight_triplets(n, trips);
}

double smoothness(const Eigen::MatrixXd& V, const GraphLaplacian& lap) {
  if (V.rows() != lap.size()) {
    throw std::invalid_argument("smoothness: V row count does not match graph");
  }
  const double value = V.cwiseProduct(lap.matrix() * V).sum();
  return value < 0.0 ? 0.0 : value;
}

}  // namespace graphssl
