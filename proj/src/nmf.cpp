#include "graphssl/nmf.hpp"

#include <cmath>
#include <fstream>

#include "graphssl/errors.hpp"
#include "graphssl/rng.hpp"
#include "io_util.hpp"

namespace graphssl {

namespace {

constexpr double kDenomFloor = 1e-12;

double objective_impl(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U,
                      const Eigen::MatrixXd& V, double lambda1,
                      const GraphLaplacian* lap) {
  double value = (X - U * V.transpose()).squaredNorm();
  if (lambda1 > 0.0 && lap != nullptr) {
    value += lambda1 * smoothness(V, *lap);
  }
  return value;
}

// Shared multiplicative-update loop. `lap` may be null only when lambda1 is
// zero; the graph terms are skipped entirely in that case so a lambda1 = 0
// fit is arithmetically identical to plain NMF.
NmfModel fit_impl(const Eigen::MatrixXd& X, const GraphLaplacian* lap, int k,
                  double lambda1, int max_iters, double tol,
                  std::uint64_t seed) {
  const Eigen::Index m = X.rows();
  const Eigen::Index n = X.cols();
  if ((X.array() < 0.0).any()) {
    throw DataError("NMF requires nonnegative input");
  }
  if (k < 1 || k > std::min(m, n)) {
    throw std::invalid_argument("factorization rank k out of range");
  }
  if (lambda1 < 0.0) throw std::invalid_argument("lambda1 must be nonnegative");
  if (lambda1 > 0.0 && lap == nullptr) {
    throw std::invalid_argument("graph regularization requires a Laplacian");
  }
  if (lap != nullptr && lap->size() != n) {
    throw std::invalid_argument("Laplacian size does not match sample count");
  }
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");

  NmfModel model;
  model.lambda1 = lambda1;
  model.seed = seed;

  // Strictly positive init keeps the multiplicative updates alive.
  Rng rng(seed);
  model.U.resize(m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) model.U(i, j) = rng.uniform_open01();
  }
  model.V.resize(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) model.V(i, j) = rng.uniform_open01();
  }

  const bool graph_terms = lambda1 > 0.0 && lap != nullptr;
  model.objective_trace.push_back(objective_impl(X, model.U, model.V, lambda1, lap));

  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd num_u = X * model.V;
    Eigen::MatrixXd den_u = model.U * (model.V.transpose() * model.V);
    model.U = model.U.cwiseProduct(num_u.cwiseQuotient(den_u.cwiseMax(kDenomFloor)));

    Eigen::MatrixXd num_v = X.transpose() * model.U;
    Eigen::MatrixXd den_v = model.V * (model.U.transpose() * model.U);
    if (graph_terms) {
      num_v.noalias() += lambda1 * (lap->weights() * model.V);
      den_v.noalias() += lambda1 * (lap->degrees().asDiagonal() * model.V);
    }
    model.V = model.V.cwiseProduct(num_v.cwiseQuotient(den_v.cwiseMax(kDenomFloor)));

    const double prev = model.objective_trace.back();
    const double cur = objective_impl(X, model.U, model.V, lambda1, lap);
    model.objective_trace.push_back(cur);
    model.iterations_run = it + 1;
    if (prev <= 0.0) break;
    if ((prev - cur) / prev < tol) break;
  }
  return model;
}

}  // namespace

double nmf_objective(const Eigen::MatrixXd& X, const NmfModel& model,
                     const GraphLaplacian& lap) {
  if (X.rows() != model.U.rows() || X.cols() != model.V.rows() ||
      model.U.cols() != model.V.cols()) {
    throw std::invalid_argument("nmf_objective: shape mismatch");
  }
  return objective_impl(X, model.U, model.V, model.lambda1, &lap);
}

NmfModel fit_fgnmf(const Eigen::MatrixXd& X, const GraphLaplacian& lap, int k,
                   double lambda1, int max_iters, double tol,
                   std::uint64_t seed) {
  return fit_impl(X, &lap, k, lambda1, max_iters, tol, seed);
}

NmfModel fit_nmf(const Eigen::MatrixXd& X, int k, int max_iters, double tol,
                 std::uint64_t seed) {
  return fit_impl(X, nullptr, k, 0.0, max_iters, tol, seed);
}

ClusteringResult predict_clusters_nmf(const NmfModel& model,
                                      const KmeansConfig& cfg) {
  return kmeans(model.V, cfg);
}

void save_nmf_model(const NmfModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  out << "m=" << model.U.rows() << ",n=" << model.V.rows()
      << ",k=" << model.U.cols()
      << ",lambda1=" << detail::format_double(model.lambda1)
      << ",iterations=" << model.iterations_run << ",seed=" << model.seed
      << "\n";
  const auto write_rows = [&out](const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (j) out << ",";
        out << detail::format_double(M(i, j));
      }
      out << "\n";
    }
  };
  write_rows(model.U);
  write_rows(model.V);
  for (double v : model.objective_trace) out << detail::format_double(v) << "\n";
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

NmfModel load_nmf_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) {
    throw DataError(DataError::Code::EmptyFile, "empty model file '" + path + "'");
  }
  Eigen::Index m = -1, n = -1, k = -1;
  NmfModel model;
  for (const auto& field : detail::split(detail::trim(header), ',')) {
    const auto kv = detail::split(field, '=');
    if (kv.size() != 2) throw DataError(DataError::Code::Parse, "bad model header");
    const std::string key = detail::trim(kv[0]);
    const std::string val = detail::trim(kv[1]);
    if (key == "m") m = detail::parse_int(val, path);
    else if (key == "n") n = detail::parse_int(val, path);
    else if (key == "k") k = detail::parse_int(val, path);
    else if (key == "lambda1") model.lambda1 = detail::parse_double(val, path);
    else if (key == "iterations") model.iterations_run = static_cast<int>(detail::parse_int(val, path));
    else if (key == "seed") model.seed = static_cast<std::uint64_t>(detail::parse_int(val, path));
    else throw DataError(DataError::Code::Parse, "unknown model header key '" + key + "'");
  }
  if (m <= 0 || n <= 0 || k <= 0) {
    throw DataError(DataError::Code::Parse, "incomplete model header");
  }
  const auto read_rows = [&in, &path](Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      std::string line;
      if (!std::getline(in, line)) {
        throw DataError(DataError::Code::Parse, "truncated model file");
      }
      const auto tokens = detail::split(detail::trim(line), ',');
      if (static_cast<Eigen::Index>(tokens.size()) != M.cols()) {
        throw DataError(DataError::Code::RaggedRows, "model row width mismatch");
      }
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        M(i, j) = detail::parse_double(detail::trim(tokens[static_cast<std::size_t>(j)]), path);
      }
    }
  };
  model.U.resize(m, k);
  model.V.resize(n, k);
  read_rows(model.U);
  read_rows(model.V);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    model.objective_trace.push_back(detail::parse_double(t, path));
  }
  return model;
}

}  // namespace graphssl
