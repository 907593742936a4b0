#include "graphssl/sparse_coding.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

#include "graphssl/errors.hpp"
#include "graphssl/rng.hpp"
#include "io_util.hpp"

namespace graphssl {

namespace {

constexpr double kDenomFloor = 1e-12;
constexpr double kExactZero = 1e-12;

void check_shapes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& S, const GraphLaplacian& lap) {
  if (B.rows() != X.rows() || S.cols() != X.cols() || B.cols() != S.rows()) {
    throw std::invalid_argument("sparse coding: factor shapes do not match X");
  }
  if (lap.size() != X.cols()) {
    throw std::invalid_argument("Laplacian size does not match sample count");
  }
}

}  // namespace

double soft_threshold(double z, double threshold) {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

GscObjectiveTerms gsc_objective_terms(const Eigen::MatrixXd& X,
                                      const SparseCodingModel& model,
                                      const GraphLaplacian& lap) {
  check_shapes(X, model.B, model.S, lap);
  GscObjectiveTerms terms;
  terms.reconstruction = (X - model.B * model.S).squaredNorm();
  terms.smoothness = smoothness(model.S.transpose(), lap);
  terms.l1 = model.S.cwiseAbs().sum();
  return terms;
}

double gsc_objective(const Eigen::MatrixXd& X, const SparseCodingModel& model,
                     const GraphLaplacian& lap) {
  return gsc_objective_terms(X, model, lap)
      .total(model.lambda2, model.lambda3);
}

// One coordinate at a time, each solved exactly. With G = B^T B and
// H = B^T X, the subproblem in S_rj is
//   (G_rr + lambda2 L_jj) s^2 - 2 numerator s + lambda3 |s| + const
// with numerator = H_rj - sum_{r'!=r} G_rr' S_r'j
//                 - lambda2 sum_{j'!=j} L_jj' S_rj',
// minimized by soft_threshold(numerator, lambda3/2) / (G_rr + lambda2 L_jj).
// C = G S and Z = S L are kept current incrementally and rebuilt at every
// sweep to stop drift from accumulating.
Eigen::MatrixXd update_codes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B,
                             Eigen::MatrixXd S, const GraphLaplacian& lap,
                             double lambda2, double lambda3, int sweeps) {
  check_shapes(X, B, S, lap);
  if (lambda2 < 0.0 || lambda3 < 0.0) {
    throw std::invalid_argument("penalties must be nonnegative");
  }
  if (B.squaredNorm() == 0.0) {
    throw std::invalid_argument("dictionary is entirely zero");
  }
  const Eigen::Index k = B.cols();
  const Eigen::Index n = X.cols();
  const bool couple = lambda2 > 0.0;

  const Eigen::MatrixXd G = B.transpose() * B;
  const Eigen::MatrixXd H = B.transpose() * X;
  const Eigen::SparseMatrix<double>& L = lap.matrix();
  Eigen::VectorXd lap_diag = Eigen::VectorXd::Zero(n);
  if (couple) lap_diag = L.diagonal();

  const double half_l3 = lambda3 / 2.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    Eigen::MatrixXd C = G * S;
    Eigen::MatrixXd Z;
    if (couple) Z = (L * S.transpose()).transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0; r < k; ++r) {
        const double quad = G(r, r) + (couple ? lambda2 * lap_diag(j) : 0.0);
        if (quad < kDenomFloor) continue;
        const double s_old = S(r, j);
        double numerator = H(r, j) - (C(r, j) - G(r, r) * s_old);
        if (couple) {
          numerator -= lambda2 * (Z(r, j) - lap_diag(j) * s_old);
        }
        const double s_new = soft_threshold(numerator, half_l3) / quad;
        if (s_new == s_old) continue;
        const double delta = s_new - s_old;
        S(r, j) = s_new;
        C.col(j).noalias() += delta * G.col(r);
        if (couple) {
          for (Eigen::SparseMatrix<double>::InnerIterator it(L, j); it; ++it) {
            Z(r, it.row()) += delta * it.value();
          }
        }
      }
    }
  }
  return S;
}

DictionaryUpdateResult update_dictionary(const Eigen::MatrixXd& X,
                                         const Eigen::MatrixXd& S,
                                         Eigen::MatrixXd B, double c,
                                         int max_iters, double tol) {
  if (B.rows() != X.rows() || S.cols() != X.cols() || B.cols() != S.rows()) {
    throw std::invalid_argument("update_dictionary: shape mismatch");
  }
  if (!(c > 0.0)) throw std::invalid_argument("column norm bound c must be positive");

  DictionaryUpdateResult result;
  if (S.squaredNorm() == 0.0) {
    result.B = std::move(B);
    result.codes_all_zero = true;
    return result;
  }

  const Eigen::MatrixXd gram = S * S.transpose();  // k x k
  const Eigen::MatrixXd target = X * S.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                     Eigen::EigenvaluesOnly);
  const double lipschitz = 2.0 * eig.eigenvalues().maxCoeff();
  if (!(lipschitz > 0.0)) {
    result.B = std::move(B);
    result.codes_all_zero = true;
    return result;
  }
  const double step = 1.0 / lipschitz;

  const auto project_columns = [c](Eigen::MatrixXd& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double nsq = M.col(j).squaredNorm();
      if (nsq > c) {
        // Tiny shrink keeps the projected norm under c despite round-off.
        M.col(j) *= std::sqrt(c / nsq) * (1.0 - 1e-14);
      }
    }
  };

  project_columns(B);
  double prev = (X - B * S).squaredNorm();
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd grad = 2.0 * (B * gram - target);
    B.noalias() -= step * grad;
    project_columns(B);
    const double cur = (X - B * S).squaredNorm();
    result.iterations = it + 1;
    if (prev - cur < tol * std::max(1.0, prev)) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  result.B = std::move(B);
  return result;
}

SparseCodingModel fit_fgsc(const Eigen::MatrixXd& X, const GraphLaplacian& lap,
                           int k, double lambda2, double lambda3, double c,
                           int outer_iters, double tol, std::uint64_t seed,
                           int inner_sweeps) {
  const Eigen::Index m = X.rows();
  const Eigen::Index n = X.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("X must be nonempty");
  if (k < 1) throw std::invalid_argument("dictionary size k must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("column norm bound c must be positive");
  if (lambda2 < 0.0 || lambda3 < 0.0) {
    throw std::invalid_argument("penalties must be nonnegative");
  }
  if (lap.size() != n) {
    throw std::invalid_argument("Laplacian size does not match sample count");
  }

  SparseCodingModel model;
  model.lambda2 = lambda2;
  model.lambda3 = lambda3;
  model.c = c;
  model.seed = seed;

  // Dictionary seeded from distinct data columns, rescaled to the constraint
  // boundary; zero columns fall back to random directions.
  Rng rng(seed);
  model.B.resize(m, k);
  const double radius = std::sqrt(c);
  std::vector<int> order =
      rng.sample_indices(static_cast<int>(n), std::min<int>(k, static_cast<int>(n)));
  for (int a = 0; a < k; ++a) {
    Eigen::VectorXd col;
    if (a < static_cast<int>(order.size())) {
      col = X.col(order[static_cast<std::size_t>(a)]);
    } else {
      col = Eigen::VectorXd::Zero(m);
    }
    double norm = col.norm();
    if (norm <= 1e-15) {
      for (Eigen::Index i = 0; i < m; ++i) col(i) = rng.gaussian();
      norm = col.norm();
    }
    model.B.col(a) = col * (radius / norm);
  }
  model.S = Eigen::MatrixXd::Zero(k, n);

  model.objective_trace.push_back(gsc_objective(X, model, lap));
  for (int it = 0; it < outer_iters; ++it) {
    model.S = update_codes(X, model.B, std::move(model.S), lap, lambda2,
                           lambda3, inner_sweeps);
    DictionaryUpdateResult dict = update_dictionary(X, model.S, std::move(model.B), c);
    model.B = std::move(dict.B);
    model.zero_codes_warning = model.zero_codes_warning || dict.codes_all_zero;

    const double prev = model.objective_trace.back();
    const double cur = gsc_objective(X, model, lap);
    model.objective_trace.push_back(cur);
    model.iterations_run = it + 1;
    if (prev <= 0.0) break;
    if ((prev - cur) / prev < tol) break;
  }
  return model;
}

double code_sparsity(const SparseCodingModel& model) {
  if (model.S.size() == 0) return 0.0;
  const auto zeros =
      (model.S.array().abs() < kExactZero).count();
  return static_cast<double>(zeros) / static_cast<double>(model.S.size());
}

ClusteringResult predict_clusters_gsc(const SparseCodingModel& model,
                                      const KmeansConfig& cfg) {
  return kmeans(model.S.transpose(), cfg);
}

void save_sc_model(const SparseCodingModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  std::vector<Eigen::Triplet<double>> nz;
  for (Eigen::Index j = 0; j < model.S.cols(); ++j) {
    for (Eigen::Index r = 0; r < model.S.rows(); ++r) {
      if (model.S(r, j) != 0.0) {
        nz.emplace_back(static_cast<int>(r), static_cast<int>(j), model.S(r, j));
      }
    }
  }
  out << "m=" << model.B.rows() << ",n=" << model.S.cols()
      << ",k=" << model.B.cols()
      << ",lambda2=" << detail::format_double(model.lambda2)
      << ",lambda3=" << detail::format_double(model.lambda3)
      << ",c=" << detail::format_double(model.c)
      << ",iterations=" << model.iterations_run << ",seed=" << model.seed
      << ",nnz=" << nz.size() << ",trace=" << model.objective_trace.size()
      << "\n";
  for (Eigen::Index i = 0; i < model.B.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.B.cols(); ++j) {
      if (j) out << ",";
      out << detail::format_double(model.B(i, j));
    }
    out << "\n";
  }
  for (const auto& t : nz) {
    out << t.row() << "," << t.col() << "," << detail::format_double(t.value())
        << "\n";
  }
  for (double v : model.objective_trace) out << detail::format_double(v) << "\n";
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

SparseCodingModel load_sc_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) {
    throw DataError(DataError::Code::EmptyFile, "empty model file '" + path + "'");
  }
  Eigen::Index m = -1, n = -1, k = -1;
  long long nnz = -1, trace_len = -1;
  SparseCodingModel model;
  for (const auto& field : detail::split(detail::trim(header), ',')) {
    const auto kv = detail::split(field, '=');
    if (kv.size() != 2) throw DataError(DataError::Code::Parse, "bad model header");
    const std::string key = detail::trim(kv[0]);
    const std::string val = detail::trim(kv[1]);
    if (key == "m") m = detail::parse_int(val, path);
    else if (key == "n") n = detail::parse_int(val, path);
    else if (key == "k") k = detail::parse_int(val, path);
    else if (key == "lambda2") model.lambda2 = detail::parse_double(val, path);
    else if (key == "lambda3") model.lambda3 = detail::parse_double(val, path);
    else if (key == "c") model.c = detail::parse_double(val, path);
    else if (key == "iterations") model.iterations_run = static_cast<int>(detail::parse_int(val, path));
    else if (key == "seed") model.seed = static_cast<std::uint64_t>(detail::parse_int(val, path));
    else if (key == "nnz") nnz = detail::parse_int(val, path);
    else if (key == "trace") trace_len = detail::parse_int(val, path);
    else throw DataError(DataError::Code::Parse, "unknown model header key '" + key + "'");
  }
  if (m <= 0 || n <= 0 || k <= 0 || nnz < 0 || trace_len < 0) {
    throw DataError(DataError::Code::Parse, "incomplete model header");
  }
  model.B.resize(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError(DataError::Code::Parse, "truncated model file");
    }
    const auto tokens = detail::split(detail::trim(line), ',');
    if (static_cast<Eigen::Index>(tokens.size()) != k) {
      throw DataError(DataError::Code::RaggedRows, "dictionary row width mismatch");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      model.B(i, j) = detail::parse_double(detail::trim(tokens[static_cast<std::size_t>(j)]), path);
    }
  }
  model.S = Eigen::MatrixXd::Zero(k, n);
  for (long long t = 0; t < nnz; ++t) {
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError(DataError::Code::Parse, "truncated model file");
    }
    const auto tokens = detail::split(detail::trim(line), ',');
    if (tokens.size() != 3) {
      throw DataError(DataError::Code::Parse, "code triplet needs r,j,value");
    }
    const long long r = detail::parse_int(detail::trim(tokens[0]), path);
    const long long j = detail::parse_int(detail::trim(tokens[1]), path);
    if (r < 0 || r >= k || j < 0 || j >= n) {
      throw DataError(DataError::Code::Parse, "code triplet out of range");
    }
    model.S(r, j) = detail::parse_double(detail::trim(tokens[2]), path);
  }
  for (long long t = 0; t < trace_len; ++t) {
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError(DataError::Code::Parse, "truncated model file");
    }
    model.objective_trace.push_back(detail::parse_double(detail::trim(line), path));
  }
  return model;
}

}  // namespace graphssl
