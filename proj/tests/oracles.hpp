// Independent reference computations used to check the library. Everything
// here is deliberately written the slow, obvious way and must stay free of
// the code paths under test.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "graphssl/rng.hpp"

namespace oracles {

// 1/2 * sum_ij ||v_i - v_j||^2 W_ij by direct double loop.
inline double pairwise_smoothness(const Eigen::MatrixXd& V,
                                  const Eigen::MatrixXd& W) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      total += 0.5 * (V.row(i) - V.row(j)).squaredNorm() * W(i, j);
    }
  }
  return total;
}

// Minimizer of f over [lo, hi] by golden-section search.
template <typename F>
double golden_section_min(F f, double lo, double hi, int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return (a + b) / 2.0;
}

// Best total score over all row->column bijections, by explicit enumeration.
inline double best_permutation_score(const Eigen::MatrixXd& score) {
  const int n = static_cast<int>(score.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += score(i, perm[static_cast<std::size_t>(i)]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Clustering accuracy by enumerating every cluster->class bijection.
inline double exhaustive_accuracy(const std::vector<int>& predicted,
                                  const std::vector<int>& truth, int k) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    counts(predicted[i], truth[i]) += 1.0;
  }
  return best_permutation_score(counts) / static_cast<double>(predicted.size());
}

// Random symmetric nonnegative weight matrix with zero diagonal.
inline Eigen::MatrixXd random_affinity(Eigen::Index n, graphssl::Rng& rng) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = rng.uniform01();
      W(i, j) = w;
      W(j, i) = w;
    }
  }
  return W;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     graphssl::Rng& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.gaussian();
  }
  return M;
}

inline Eigen::MatrixXd random_nonneg_matrix(Eigen::Index rows,
                                            Eigen::Index cols,
                                            graphssl::Rng& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.uniform01();
  }
  return M;
}

}  // namespace oracles
