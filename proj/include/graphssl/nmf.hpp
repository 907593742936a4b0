#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "graphssl/clustering.hpp"
#include "graphssl/laplacian.hpp"

namespace graphssl {

// Nonnegative factorization X ~ U V^T with an optional Laplacian smoothness
// penalty on the coefficient rows.
struct NmfModel {
  Eigen::MatrixXd U;  // m x k basis
  Eigen::MatrixXd V;  // n x k coefficients, one row per sample
  double lambda1 = 0.0;
  std::vector<double> objective_trace;  // initial value plus one per iteration
  int iterations_run = 0;
  std::uint64_t seed = 0;

  Eigen::Index rank() const { return U.cols(); }
};

// ||X - U V^T||_F^2 + lambda1 * Tr(V^T L V)
double nmf_objective(const Eigen::MatrixXd& X, const NmfModel& model,
                     const GraphLaplacian& lap);

// Multiplicative updates:
//   U <- U .* (X V) ./ (U V^T V)
//   V <- V .* (X^T U + lambda1 W V) ./ (V U^T U + lambda1 D V)
// Denominators are floored at 1e-12. Factors are initialized i.i.d. uniform
// on (0,1] from the seed, U first then V, both in column-major order.
// Stops after max_iters or when the relative objective decrease drops
// below tol.
NmfModel fit_fgnmf(const Eigen::MatrixXd& X, const GraphLaplacian& lap, int k,
                   double lambda1, int max_iters = 300, double tol = 1e-5,
                   std::uint64_t seed = 0);

// Plain NMF: the same updates with the graph terms absent. fit_fgnmf with
// lambda1 = 0 produces bit-identical factors for the same seed.
NmfModel fit_nmf(const Eigen::MatrixXd& X, int k, int max_iters = 300,
                 double tol = 1e-5, std::uint64_t seed = 0);

// k-means over the coefficient rows.
ClusteringResult predict_clusters_nmf(const NmfModel& model,
                                      const KmeansConfig& cfg);

void save_nmf_model(const NmfModel& model, const std::string& path);
NmfModel load_nmf_model(const std::string& path);

}  // namespace graphssl
