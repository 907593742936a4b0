#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace graphssl {

enum class DataFormat { Csv, DenseBinary };

// Feature matrix with samples as columns. Ground-truth labels, when present,
// cover every sample; only the first `labeled_prefix` of them are visible to
// semi-supervised learners.
struct DataSet {
  Eigen::MatrixXd X;                     // m features x n samples
  std::vector<int> labels;               // empty, or one class id per sample
  std::vector<std::string> class_names;  // class id -> display name
  Eigen::Index labeled_prefix = 0;       // l: labels[0..l) are visible
  std::string name;

  Eigen::Index feature_dim() const { return X.rows(); }
  Eigen::Index sample_count() const { return X.cols(); }
  bool has_labels() const { return !labels.empty(); }
  int class_count() const { return static_cast<int>(class_names.size()); }
  int label_of(Eigen::Index i) const {
    return labels[static_cast<std::size_t>(i)];
  }
};

// Builds a dataset from integer class ids; class names default to the
// decimal id strings.
DataSet make_labeled_dataset(Eigen::MatrixXd X, std::vector<int> labels,
                             Eigen::Index labeled_prefix = 0,
                             std::string name = "dataset");

DataSet load_dataset(const std::string& path, DataFormat format);
void save_dataset(const DataSet& ds, const std::string& path,
                  DataFormat format);

// In-place X / max(X); requires a strictly positive maximum entry.
void normalize_max(DataSet& ds);

}  // namespace graphssl
