#include "graphssl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "graphssl/errors.hpp"
#include "io_util.hpp"

namespace graphssl {

namespace {

// exp underflow would zero an edge the pattern declares present; keep masked
// edges strictly positive.
double gaussian_weight(double a, double sigma) {
  const double w = std::exp(-a / (2.0 * sigma * sigma));
  return w > 0.0 ? w : std::numeric_limits<double>::min();
}

Eigen::VectorXd row_distances(const Eigen::MatrixXd& X, const MetricMatrix& M,
                              Eigen::Index i) {
  const Eigen::Index n = X.cols();
  // (x_i - x_j)^T M (x_i - x_j) for all j at once.
  const Eigen::VectorXd xi = X.col(i);
  const Eigen::MatrixXd diff = X.colwise() - xi;
  const Eigen::MatrixXd mdiff = M.matrix() * diff;
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = diff.col(j).dot(mdiff.col(j));
    out(j) = v < 0.0 ? 0.0 : v;
  }
  out(i) = 0.0;
  return out;
}

// Indices of the k smallest distances with j != self, ties by smaller index.
std::vector<Eigen::Index> k_nearest(const Eigen::VectorXd& dist,
                                    Eigen::Index self, int k) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(dist.size()) - 1);
  for (Eigen::Index j = 0; j < dist.size(); ++j) {
    if (j != self) idx.push_back(j);
  }
  const auto cmp = [&dist](Eigen::Index a, Eigen::Index b) {
    return dist(a) != dist(b) ? dist(a) < dist(b) : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

void validate_knn_k(Eigen::Index n, int k) {
  if (k < 1) throw std::invalid_argument("knn k must be at least 1");
  if (k >= n) {
    throw DataError(DataError::Code::Degenerate, "k exceeds available neighbors");
  }
}

// One pass per sample: accumulates the bandwidth sum and keeps only the kNN
// entries, so the full adjacency is never materialized.
AffinityGraph streaming_gaussian_graph(const Eigen::MatrixXd& X,
                                       const MetricMatrix& M, int knn_k,
                                       std::optional<double> sigma_override,
                                       GraphKind kind) {
  const Eigen::Index n = X.cols();
  double sum_sq = 0.0;
  std::vector<Eigen::Triplet<double>> dist_upper;  // A values on selected edges
  std::vector<std::vector<Eigen::Index>> chosen(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd dist = row_distances(X, M, i);
    sum_sq += dist.squaredNorm();
    chosen[static_cast<std::size_t>(i)] = k_nearest(dist, i, knn_k);
    for (Eigen::Index j : chosen[static_cast<std::size_t>(i)]) {
      dist_upper.emplace_back(static_cast<int>(std::min(i, j)),
                              static_cast<int>(std::max(i, j)), dist(j));
    }
  }
  double sigma;
  if (sigma_override) {
    sigma = *sigma_override;
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  } else {
    if (sum_sq <= 0.0) {
      throw DataError(DataError::Code::Degenerate,
                      "degenerate dataset: zero bandwidth");
    }
    sigma = sum_sq / (static_cast<double>(n) * static_cast<double>(n));
  }

  // Union of both directions; duplicates collapse on (i, j).
  std::sort(dist_upper.begin(), dist_upper.end(),
            [](const auto& a, const auto& b) {
              return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
            });
  std::vector<Eigen::Triplet<double>> weights;
  weights.reserve(dist_upper.size());
  for (std::size_t t = 0; t < dist_upper.size(); ++t) {
    if (t > 0 && dist_upper[t].row() == dist_upper[t - 1].row() &&
        dist_upper[t].col() == dist_upper[t - 1].col()) {
      continue;
    }
    weights.emplace_back(dist_upper[t].row(), dist_upper[t].col(),
                         gaussian_weight(dist_upper[t].value(), sigma));
  }
  return AffinityGraph::sparse(n, std::move(weights), sigma, kind, knn_k);
}

}  // namespace

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Learned: return "learned";
    case GraphKind::LabelWeight: return "label-weight";
    case GraphKind::UnsupervisedGaussian: return "unsupervised-gaussian";
  }
  throw std::logic_error("unreachable graph kind");
}

GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "learned") return GraphKind::Learned;
  if (s == "label-weight") return GraphKind::LabelWeight;
  if (s == "unsupervised-gaussian") return GraphKind::UnsupervisedGaussian;
  throw DataError(DataError::Code::Parse, "unknown graph kind '" + s + "'");
}

AffinityGraph AffinityGraph::dense(Eigen::MatrixXd W, Eigen::MatrixXd A,
                                   PatternMatrix P, double sigma,
                                   GraphKind kind, int knn_k) {
  AffinityGraph g;
  g.n_ = W.rows();
  g.sigma_ = sigma;
  g.kind_ = kind;
  g.knn_k_ = knn_k;
  g.dense_storage_ = true;
  g.weights_ = std::move(W);
  g.adjacency_ = std::move(A);
  g.pattern_ = std::move(P);
  return g;
}

AffinityGraph AffinityGraph::sparse(Eigen::Index n,
                                    std::vector<Eigen::Triplet<double>> upper,
                                    double sigma, GraphKind kind, int knn_k) {
  if (n <= kDenseStorageLimit) {
    // Small graphs stay dense even when assembled from triplets.
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    PatternMatrix P = PatternMatrix::Zero(n, n);
    for (const auto& t : upper) {
      W(t.row(), t.col()) = t.value();
      W(t.col(), t.row()) = t.value();
      P(t.row(), t.col()) = 1;
      P(t.col(), t.row()) = 1;
    }
    return dense(std::move(W), Eigen::MatrixXd(), std::move(P), sigma, kind,
                 knn_k);
  }
  AffinityGraph g;
  g.n_ = n;
  g.sigma_ = sigma;
  g.kind_ = kind;
  g.knn_k_ = knn_k;
  g.dense_storage_ = false;
  std::vector<Eigen::Triplet<double>> both;
  both.reserve(upper.size() * 2);
  for (const auto& t : upper) {
    both.emplace_back(t.row(), t.col(), t.value());
    both.emplace_back(t.col(), t.row(), t.value());
  }
  g.weights_sp_.resize(n, n);
  g.weights_sp_.setFromTriplets(both.begin(), both.end());
  g.weights_sp_.makeCompressed();
  return g;
}

AffinityGraph AffinityGraph::from_weights(Eigen::MatrixXd W, GraphKind kind,
                                          double sigma) {
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
  PatternMatrix P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      P(i, j) = W(i, j) != 0.0 ? 1 : 0;
    }
  }
  return dense(std::move(W), Eigen::MatrixXd(), std::move(P), sigma, kind, 0);
}

const Eigen::MatrixXd& AffinityGraph::weights() const {
  if (!dense_storage_) {
    throw std::logic_error("weights(): graph uses sparse storage");
  }
  return weights_;
}

const Eigen::MatrixXd& AffinityGraph::adjacency() const {
  if (!has_adjacency()) {
    throw std::logic_error("adjacency was not retained for this graph");
  }
  return adjacency_;
}

const PatternMatrix& AffinityGraph::pattern() const {
  if (!dense_storage_) {
    throw std::logic_error("pattern(): graph uses sparse storage");
  }
  return pattern_;
}

Eigen::SparseMatrix<double> AffinityGraph::weights_sparse() const {
  if (!dense_storage_) return weights_sp_;
  Eigen::SparseMatrix<double> sp(n_, n_);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index j = 0; j < n_; ++j) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (weights_(i, j) != 0.0) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j),
                           weights_(i, j));
      }
    }
  }
  sp.setFromTriplets(trips.begin(), trips.end());
  sp.makeCompressed();
  return sp;
}

Eigen::VectorXd AffinityGraph::degrees() const {
  if (dense_storage_) return weights_.rowwise().sum();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < weights_sp_.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(weights_sp_, j); it; ++it) {
      d(it.row()) += it.value();
    }
  }
  return d;
}

double AffinityGraph::weight(Eigen::Index i, Eigen::Index j) const {
  return dense_storage_ ? weights_(i, j) : weights_sp_.coeff(i, j);
}

Eigen::Index AffinityGraph::edge_count() const {
  Eigen::Index count = 0;
  if (dense_storage_) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        if (weights_(i, j) != 0.0) ++count;
      }
    }
  } else {
    count = weights_sp_.nonZeros() / 2;
  }
  return count;
}

std::vector<Eigen::Triplet<double>> AffinityGraph::upper_triplets() const {
  std::vector<Eigen::Triplet<double>> out;
  if (dense_storage_) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        if (weights_(i, j) != 0.0) {
          out.emplace_back(static_cast<int>(i), static_cast<int>(j),
                           weights_(i, j));
        }
      }
    }
  } else {
    for (int j = 0; j < weights_sp_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(weights_sp_, j); it;
           ++it) {
        if (it.row() < it.col()) {
          out.emplace_back(static_cast<int>(it.row()),
                           static_cast<int>(it.col()), it.value());
        }
      }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
  }
  return out;
}

Eigen::MatrixXd full_adjacency(const Eigen::MatrixXd& X,
                               const MetricMatrix& M) {
  const Eigen::Index n = X.cols();
  if (n < 2) {
    throw std::invalid_argument("full adjacency requires at least 2 samples");
  }
  if (X.rows() != M.dim()) {
    throw std::invalid_argument("metric dimension does not match features");
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd dist = row_distances(X, M, i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      A(i, j) = dist(j);
      A(j, i) = dist(j);
    }
  }
  return A;
}

Eigen::MatrixXd full_adjacency(const DataSet& ds, const MetricMatrix& M) {
  return full_adjacency(ds.X, M);
}

PatternMatrix knn_row_selection(const Eigen::MatrixXd& A, int k) {
  const Eigen::Index n = A.rows();
  validate_knn_k(n, k);
  PatternMatrix P = PatternMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j : k_nearest(A.row(i).transpose(), i, k)) {
      P(i, j) = 1;
    }
  }
  return P;
}

PatternMatrix knn_sparsify(const Eigen::MatrixXd& A, int k) {
  PatternMatrix P = knn_row_selection(A, k);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < P.cols(); ++j) {
      const std::uint8_t v = std::max(P(i, j), P(j, i));
      P(i, j) = v;
      P(j, i) = v;
    }
  }
  return P;
}

double default_bandwidth(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) {
    throw std::invalid_argument("adjacency must be square and nonempty");
  }
  const double sum_sq = A.squaredNorm();
  if (sum_sq <= 0.0) {
    throw DataError(DataError::Code::Degenerate,
                    "degenerate dataset: zero bandwidth");
  }
  return sum_sq / (static_cast<double>(n) * static_cast<double>(n));
}

AffinityGraph gaussian_reweight(const PatternMatrix& P,
                                const Eigen::MatrixXd& A, double sigma,
                                GraphKind kind, int knn_k) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const Eigen::Index n = A.rows();
  if (P.rows() != n || P.cols() != A.cols() || A.cols() != n) {
    throw std::invalid_argument("pattern and adjacency shapes differ");
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (P(i, j)) {
        const double w = gaussian_weight(A(i, j), sigma);
        W(i, j) = w;
        W(j, i) = w;
      }
    }
  }
  return AffinityGraph::dense(std::move(W), A, P, sigma, kind, knn_k);
}

AffinityGraph label_weight_graph(const DataSet& ds) {
  const Eigen::Index n = ds.sample_count();
  const Eigen::Index l = ds.labeled_prefix;
  if (l < 2 || !ds.has_labels()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "label weight graph needs at least 2 labeled samples");
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = i + 1; j < l; ++j) {
      if (ds.label_of(i) == ds.label_of(j)) {
        W(i, j) = 1.0;
        W(j, i) = 1.0;
      }
    }
  }
  PatternMatrix P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) P(i, j) = W(i, j) != 0.0 ? 1 : 0;
  }
  return AffinityGraph::dense(std::move(W), Eigen::MatrixXd(), std::move(P),
                              0.0, GraphKind::LabelWeight, 0);
}

AffinityGraph metric_gaussian_graph(const Eigen::MatrixXd& X,
                                    const MetricMatrix& M, int knn_k,
                                    std::optional<double> sigma_override,
                                    GraphKind kind) {
  const Eigen::Index n = X.cols();
  if (n < 2) throw std::invalid_argument("graph needs at least 2 samples");
  validate_knn_k(n, knn_k);
  if (n > AffinityGraph::kDenseStorageLimit) {
    return streaming_gaussian_graph(X, M, knn_k, sigma_override, kind);
  }
  const Eigen::MatrixXd A = full_adjacency(X, M);
  const PatternMatrix P = knn_sparsify(A, knn_k);
  double sigma;
  if (sigma_override) {
    sigma = *sigma_override;
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  } else {
    sigma = default_bandwidth(A);
  }
  return gaussian_reweight(P, A, sigma, kind, knn_k);
}

AffinityGraph unsupervised_gaussian_graph(const DataSet& ds, int knn_k,
                                          std::optional<double> sigma_override) {
  return metric_gaussian_graph(ds.X, MetricMatrix::identity(ds.feature_dim()),
                               knn_k, sigma_override,
                               GraphKind::UnsupervisedGaussian);
}

AffinityGraph build_learned_graph(const DataSet& ds, int knn_k,
                                  double kiss_regularization,
                                  std::optional<double> sigma_override) {
  const LabeledPairs pairs = enumerate_pairs(ds);
  const MetricMatrix M = learn_kiss_metric(ds, pairs, kiss_regularization);
  return metric_gaussian_graph(ds.X, M, knn_k, sigma_override,
                               GraphKind::Learned);
}

void save_graph(const AffinityGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  out << "n=" << g.size() << ",k=" << g.knn_k()
      << ",sigma=" << detail::format_double(g.sigma())
      << ",kind=" << to_string(g.kind()) << "\n";
  for (const auto& t : g.upper_triplets()) {
    out << t.row() << "," << t.col() << "," << detail::format_double(t.value())
        << "\n";
  }
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

AffinityGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) {
    throw DataError(DataError::Code::EmptyFile, "empty graph file '" + path + "'");
  }
  Eigen::Index n = -1;
  int k = -1;
  double sigma = 0.0;
  std::optional<GraphKind> kind;
  for (const auto& field : detail::split(detail::trim(header), ',')) {
    const auto kv = detail::split(field, '=');
    if (kv.size() != 2) {
      throw DataError(DataError::Code::Parse, "malformed graph header field");
    }
    const std::string key = detail::trim(kv[0]);
    const std::string val = detail::trim(kv[1]);
    if (key == "n") n = detail::parse_int(val, path);
    else if (key == "k") k = static_cast<int>(detail::parse_int(val, path));
    else if (key == "sigma") sigma = detail::parse_double(val, path);
    else if (key == "kind") kind = graph_kind_from_string(val);
    else throw DataError(DataError::Code::Parse, "unknown graph header key '" + key + "'");
  }
  if (n <= 0 || k < 0 || !kind) {
    throw DataError(DataError::Code::Parse, "incomplete graph header");
  }

  std::vector<Eigen::Triplet<double>> upper;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto tokens = detail::split(t, ',');
    if (tokens.size() != 3) {
      throw DataError(DataError::Code::Parse, "graph triplet needs i,j,w");
    }
    const long long i = detail::parse_int(detail::trim(tokens[0]), path);
    const long long j = detail::parse_int(detail::trim(tokens[1]), path);
    const double w = detail::parse_double(detail::trim(tokens[2]), path);
    if (i < 0 || j <= i || j >= n) {
      throw DataError(DataError::Code::Parse, "triplet indices out of range");
    }
    if (w < 0.0) {
      throw DataError(DataError::Code::Parse, "negative weight in graph file");
    }
    upper.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
  }
  return AffinityGraph::sparse(n, std::move(upper), sigma, *kind, k);
}

}  // namespace graphssl
