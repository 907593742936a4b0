#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "graphssl/dataset.hpp"

namespace graphssl {

enum class MetricProvenance { Identity, KissLearned };

// Positive semi-definite matrix M defining the squared Mahalanobis distance
// d^2(x, y) = (x - y)^T M (x - y). Immutable once built; safe to share across
// threads read-only.
class MetricMatrix {
 public:
  static MetricMatrix identity(Eigen::Index dim);

  // Takes ownership of a matrix assumed PSD up to round-off. Symmetry is
  // enforced exactly by mirroring the upper triangle.
  static MetricMatrix from_matrix(Eigen::MatrixXd m, MetricProvenance prov,
                                  double regularization = 0.0);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double regularization() const { return regularization_; }
  MetricProvenance provenance() const { return provenance_; }

 private:
  MetricMatrix(Eigen::MatrixXd m, MetricProvenance prov, double reg)
      : m_(std::move(m)), provenance_(prov), regularization_(reg) {}

  Eigen::MatrixXd m_;
  MetricProvenance provenance_;
  double regularization_;
};

// Unordered index pairs drawn from the labeled prefix of a dataset.
// Similar pairs share a class label, dissimilar pairs do not; the two lists
// are disjoint and contain no self-pairs.
struct LabeledPairs {
  std::vector<std::pair<int, int>> similar;
  std::vector<std::pair<int, int>> dissimilar;
};

// All unordered pairs over the labeled prefix, split by label equality.
// Throws DataError "insufficient label diversity" when every visible label is
// the same class, and "insufficient similar pairs" when no class repeats.
LabeledPairs enumerate_pairs(const DataSet& ds);

// KISS estimator: M0 = inv(Cov_similar) - inv(Cov_dissimilar), where each
// covariance is the mean outer product of pair differences, shrunk toward the
// identity as Cov += regularization * trace(Cov)/m * I before inversion.
// The result is projected onto the PSD cone by clipping negative eigenvalues.
MetricMatrix learn_kiss_metric(const DataSet& ds, const LabeledPairs& pairs,
                               double regularization = 1e-3);

// (xi - xj)^T M (xi - xj), clamped to zero when round-off drives it negative.
double metric_distance_sq(const MetricMatrix& M,
                          const Eigen::Ref<const Eigen::VectorXd>& xi,
                          const Eigen::Ref<const Eigen::VectorXd>& xj);

// Dense CSV with a "m=<dim>" header line; values round-trip exactly.
void save_metric_csv(const MetricMatrix& M, const std::string& path);
MetricMatrix load_metric_csv(const std::string& path);

}  // namespace graphssl
