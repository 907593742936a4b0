#include "graphssl/metric.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <sstream>

#include "graphssl/errors.hpp"
#include "io_util.hpp"

namespace graphssl {

namespace {

// Eigendecomposition-based inverse of a shrunk covariance. Throws when the
// matrix is numerically singular even after shrinkage.
Eigen::MatrixXd shrink_and_invert(const Eigen::MatrixXd& cov,
                                  double regularization,
                                  const char* which) {
  const Eigen::Index m = cov.rows();
  Eigen::MatrixXd shrunk = cov;
  const double ridge = regularization * cov.trace() / static_cast<double>(m);
  shrunk.diagonal().array() += ridge;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(shrunk);
  if (eig.info() != Eigen::Success) {
    throw DataError(DataError::Code::SingularCovariance,
                    std::string(which) +
                        " covariance eigendecomposition failed; "
                        "covariance singular; raise regularization");
  }
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (min_ev <= 1e-12 * std::max(1.0, max_ev)) {
    throw DataError(DataError::Code::SingularCovariance,
                    std::string(which) +
                        " covariance singular; raise regularization");
  }
  Eigen::MatrixXd inv = eig.eigenvectors() *
                        eig.eigenvalues().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
  inv = inv.selfadjointView<Eigen::Upper>();
  return inv;
}

Eigen::MatrixXd pair_covariance(const Eigen::MatrixXd& X,
                                const std::vector<std::pair<int, int>>& pairs) {
  const Eigen::Index m = X.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [i, j] : pairs) {
    const Eigen::VectorXd d = X.col(i) - X.col(j);
    cov.selfadjointView<Eigen::Upper>().rankUpdate(d);
  }
  cov = cov.selfadjointView<Eigen::Upper>();
  cov /= static_cast<double>(pairs.size());
  return cov;
}

}  // namespace

MetricMatrix MetricMatrix::identity(Eigen::Index dim) {
  if (dim <= 0) throw std::invalid_argument("metric dimension must be positive");
  return MetricMatrix(Eigen::MatrixXd::Identity(dim, dim),
                      MetricProvenance::Identity, 0.0);
}

MetricMatrix MetricMatrix::from_matrix(Eigen::MatrixXd m,
                                       MetricProvenance prov,
                                       double regularization) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("metric matrix must be square and nonempty");
  }
  m = m.selfadjointView<Eigen::Upper>();  // exact symmetry
  return MetricMatrix(std::move(m), prov, regularization);
}

LabeledPairs enumerate_pairs(const DataSet& ds) {
  const Eigen::Index l = ds.labeled_prefix;
  if (l < 2 || !ds.has_labels()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "need at least 2 labeled samples to enumerate pairs");
  }
  LabeledPairs pairs;
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = i + 1; j < l; ++j) {
      auto& bucket =
          ds.label_of(i) == ds.label_of(j) ? pairs.similar : pairs.dissimilar;
      bucket.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (pairs.dissimilar.empty()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "insufficient label diversity");
  }
  if (pairs.similar.empty()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "insufficient similar pairs");
  }
  return pairs;
}

MetricMatrix learn_kiss_metric(const DataSet& ds, const LabeledPairs& pairs,
                               double regularization) {
  if (regularization < 0.0) {
    throw std::invalid_argument("regularization must be nonnegative");
  }
  if (pairs.similar.empty() || pairs.dissimilar.empty()) {
    throw std::invalid_argument("both pair lists must be nonempty");
  }
  const Eigen::Index l = ds.labeled_prefix;
  for (const auto* list : {&pairs.similar, &pairs.dissimilar}) {
    for (const auto& [i, j] : *list) {
      if (i == j || i < 0 || j < 0 || i >= l || j >= l) {
        throw std::invalid_argument("pair indices must be distinct and < l");
      }
    }
  }

  const Eigen::MatrixXd cov_sim = pair_covariance(ds.X, pairs.similar);
  const Eigen::MatrixXd cov_dis = pair_covariance(ds.X, pairs.dissimilar);
  Eigen::MatrixXd raw = shrink_and_invert(cov_sim, regularization, "similar") -
                        shrink_and_invert(cov_dis, regularization, "dissimilar");
  raw = 0.5 * (raw + raw.transpose().eval());

  // PSD projection: clip negative eigenvalues at zero.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(raw);
  if (eig.info() != Eigen::Success) {
    throw DataError(DataError::Code::SingularCovariance,
                    "metric eigendecomposition failed");
  }
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd psd =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return MetricMatrix::from_matrix(std::move(psd), MetricProvenance::KissLearned,
                                   regularization);
}

double metric_distance_sq(const MetricMatrix& M,
                          const Eigen::Ref<const Eigen::VectorXd>& xi,
                          const Eigen::Ref<const Eigen::VectorXd>& xj) {
  if (xi.size() != M.dim() || xj.size() != M.dim()) {
    throw std::invalid_argument("metric_distance_sq: dimension mismatch");
  }
  const Eigen::VectorXd d = xi - xj;
  const double v = d.dot(M.matrix() * d);
  return v < 0.0 ? 0.0 : v;
}

void save_metric_csv(const MetricMatrix& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  out << "m=" << M.dim() << "\n";
  for (Eigen::Index i = 0; i < M.dim(); ++i) {
    for (Eigen::Index j = 0; j < M.dim(); ++j) {
      if (j) out << ",";
      out << detail::format_double(M.matrix()(i, j));
    }
    out << "\n";
  }
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

MetricMatrix load_metric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) {
    throw DataError(DataError::Code::EmptyFile, "empty metric file '" + path + "'");
  }
  const auto kv = detail::split(detail::trim(header), '=');
  if (kv.size() != 2 || detail::trim(kv[0]) != "m") {
    throw DataError(DataError::Code::Parse, "expected 'm=<dim>' header");
  }
  const Eigen::Index m = detail::parse_int(detail::trim(kv[1]), path);
  if (m <= 0) throw DataError(DataError::Code::Parse, "metric dim must be positive");

  Eigen::MatrixXd mat(m, m);
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (row >= m) throw DataError(DataError::Code::RaggedRows, "extra metric rows");
    const auto tokens = detail::split(t, ',');
    if (static_cast<Eigen::Index>(tokens.size()) != m) {
      throw DataError(DataError::Code::RaggedRows,
                      "metric row " + std::to_string(row) + " has wrong width");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      mat(row, j) = detail::parse_double(detail::trim(tokens[static_cast<std::size_t>(j)]), path);
    }
    ++row;
  }
  if (row != m) throw DataError(DataError::Code::RaggedRows, "missing metric rows");
  const bool is_identity = mat.isIdentity(0.0);
  return MetricMatrix::from_matrix(std::move(mat),
                                   is_identity ? MetricProvenance::Identity
                                               : MetricProvenance::KissLearned);
}

}  // namespace graphssl
