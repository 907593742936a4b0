#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "graphssl/clustering.hpp"
#include "graphssl/laplacian.hpp"

namespace graphssl {

// Dictionary-plus-codes factorization X ~ B S with an L1 penalty on the
// codes, a Laplacian coupling across code columns and bounded dictionary
// column norms ||b_i||^2 <= c.
struct SparseCodingModel {
  Eigen::MatrixXd B;  // m x k dictionary
  Eigen::MatrixXd S;  // k x n codes, one column per sample
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double c = 1.0;
  std::vector<double> objective_trace;  // initial value plus one per outer pass
  int iterations_run = 0;
  std::uint64_t seed = 0;
  bool zero_codes_warning = false;  // a dictionary update saw all-zero codes

  Eigen::Index rank() const { return B.cols(); }
};

struct GscObjectiveTerms {
  double reconstruction = 0.0;  // ||X - B S||_F^2
  double smoothness = 0.0;      // Tr(S L S^T)
  double l1 = 0.0;              // sum_i ||s_i||_1
  double total(double lambda2, double lambda3) const {
    return reconstruction + lambda2 * smoothness + lambda3 * l1;
  }
};

GscObjectiveTerms gsc_objective_terms(const Eigen::MatrixXd& X,
                                      const SparseCodingModel& model,
                                      const GraphLaplacian& lap);

double gsc_objective(const Eigen::MatrixXd& X, const SparseCodingModel& model,
                     const GraphLaplacian& lap);

// sign(z) * max(|z| - threshold, 0)
double soft_threshold(double z, double threshold);

// Coordinate descent over every entry of S, `sweeps` full passes. Each
// scalar subproblem is quadratic plus L1 and is solved exactly by
// soft-thresholding, so the objective cannot increase. Coordinates whose
// quadratic coefficient falls below the floor are left unchanged.
Eigen::MatrixXd update_codes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B,
                             Eigen::MatrixXd S, const GraphLaplacian& lap,
                             double lambda2, double lambda3, int sweeps = 1);

struct DictionaryUpdateResult {
  Eigen::MatrixXd B;
  bool codes_all_zero = false;  // S was all zeros; B returned unchanged
  int iterations = 0;
};

// Projected gradient on min_B ||X - B S||^2 subject to ||b_i||^2 <= c, with
// the step set from the Lipschitz bound 2 * lmax(S S^T). Each iteration
// projects every column onto the radius-sqrt(c) ball and never increases the
// reconstruction error.
DictionaryUpdateResult update_dictionary(const Eigen::MatrixXd& X,
                                         const Eigen::MatrixXd& S,
                                         Eigen::MatrixXd B, double c,
                                         int max_iters = 200,
                                         double tol = 1e-10);

// Alternates update_codes and update_dictionary. The dictionary starts from
// k distinct data columns rescaled to norm sqrt(c) and the codes start at
// zero. Stops after outer_iters passes or when the relative objective
// decrease drops below tol.
SparseCodingModel fit_fgsc(const Eigen::MatrixXd& X, const GraphLaplacian& lap,
                           int k, double lambda2, double lambda3,
                           double c = 1.0, int outer_iters = 100,
                           double tol = 1e-5, std::uint64_t seed = 0,
                           int inner_sweeps = 3);

// Fraction of code entries that are exactly zero (|s| < 1e-12).
double code_sparsity(const SparseCodingModel& model);

// k-means over code columns (one point per sample).
ClusteringResult predict_clusters_gsc(const SparseCodingModel& model,
                                      const KmeansConfig& cfg);

void save_sc_model(const SparseCodingModel& model, const std::string& path);
SparseCodingModel load_sc_model(const std::string& path);

}  // namespace graphssl
