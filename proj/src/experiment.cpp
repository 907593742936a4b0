#include "graphssl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "graphssl/clustering.hpp"
#include "graphssl/errors.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/laplacian.hpp"
#include "graphssl/nmf.hpp"
#include "graphssl/rng.hpp"
#include "graphssl/sparse_coding.hpp"
#include "io_util.hpp"

namespace graphssl {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Kmeans: return "kmeans";
    case Algorithm::Gnmf: return "gnmf";
    case Algorithm::Lgnmf: return "lgnmf";
    case Algorithm::Fgnmf: return "fgnmf";
    case Algorithm::Gsc: return "gsc";
    case Algorithm::Lgsc: return "lgsc";
    case Algorithm::Fgsc: return "fgsc";
  }
  throw std::logic_error("unreachable algorithm");
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "kmeans") return Algorithm::Kmeans;
  if (s == "gnmf") return Algorithm::Gnmf;
  if (s == "lgnmf") return Algorithm::Lgnmf;
  if (s == "fgnmf") return Algorithm::Fgnmf;
  if (s == "gsc") return Algorithm::Gsc;
  if (s == "lgsc") return Algorithm::Lgsc;
  if (s == "fgsc") return Algorithm::Fgsc;
  throw ConfigError("unknown algorithm '" + s + "'");
}

bool algorithm_uses_labels(Algorithm a) {
  return a == Algorithm::Lgnmf || a == Algorithm::Fgnmf ||
         a == Algorithm::Lgsc || a == Algorithm::Fgsc;
}

bool algorithm_uses_graph(Algorithm a) { return a != Algorithm::Kmeans; }

namespace {

using detail::format_double;
using detail::split;
using detail::trim;

long long config_int(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' needs an integer, got '" +
                      value + "'");
  }
}

double config_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' needs a number, got '" +
                      value + "'");
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.k_clusters < 1) throw ConfigError("k_clusters must be at least 1");
  if (cfg.test_runs < 1) throw ConfigError("test_runs must be at least 1");
  if (cfg.labels_per_class < 0) {
    throw ConfigError("labels_per_class must be nonnegative");
  }
  if (algorithm_uses_labels(cfg.algorithm) && cfg.labels_per_class < 1) {
    throw ConfigError("labels_per_class must be at least 1 for algorithm '" +
                      to_string(cfg.algorithm) + "'");
  }
  if (cfg.knn_k < 1) throw ConfigError("knn_k must be at least 1");
  if (cfg.lambda1 < 0 || cfg.lambda2 < 0 || cfg.lambda3 < 0) {
    throw ConfigError("lambda values must be nonnegative");
  }
  if (!(cfg.c > 0)) throw ConfigError("c must be positive");
  if (cfg.kiss_regularization < 0) {
    throw ConfigError("kiss_regularization must be nonnegative");
  }
  if (cfg.sigma_override && !(*cfg.sigma_override > 0)) {
    throw ConfigError("sigma must be positive");
  }
  if (cfg.nmf_max_iters < 0 || cfg.gsc_outer_iters < 0) {
    throw ConfigError("iteration limits must be nonnegative");
  }
  if (cfg.gsc_inner_sweeps < 1) {
    throw ConfigError("gsc_inner_sweeps must be at least 1");
  }
  if (cfg.kmeans_restarts < 1 || cfg.kmeans_max_iters < 1) {
    throw ConfigError("kmeans settings must be positive");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_algorithm = false, saw_k = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    }

    if (key == "algorithm") {
      cfg.algorithm = algorithm_from_string(value);
      saw_algorithm = true;
    } else if (key == "k_clusters") {
      cfg.k_clusters = static_cast<int>(config_int(value, key));
      saw_k = true;
    } else if (key == "labels_per_class") {
      cfg.labels_per_class = static_cast<int>(config_int(value, key));
    } else if (key == "test_runs") {
      cfg.test_runs = static_cast<int>(config_int(value, key));
    } else if (key == "knn_k") {
      cfg.knn_k = static_cast<int>(config_int(value, key));
    } else if (key == "lambda1") {
      cfg.lambda1 = config_double(value, key);
    } else if (key == "lambda2") {
      cfg.lambda2 = config_double(value, key);
    } else if (key == "lambda3") {
      cfg.lambda3 = config_double(value, key);
    } else if (key == "c") {
      cfg.c = config_double(value, key);
    } else if (key == "kiss_regularization") {
      cfg.kiss_regularization = config_double(value, key);
    } else if (key == "sigma") {
      cfg.sigma_override = config_double(value, key);
    } else if (key == "master_seed") {
      cfg.master_seed = static_cast<std::uint64_t>(config_int(value, key));
    } else if (key == "normalize") {
      cfg.normalize = config_int(value, key) != 0;
    } else if (key == "nmf_max_iters") {
      cfg.nmf_max_iters = static_cast<int>(config_int(value, key));
    } else if (key == "nmf_tol") {
      cfg.nmf_tol = config_double(value, key);
    } else if (key == "gsc_outer_iters") {
      cfg.gsc_outer_iters = static_cast<int>(config_int(value, key));
    } else if (key == "gsc_tol") {
      cfg.gsc_tol = config_double(value, key);
    } else if (key == "gsc_inner_sweeps") {
      cfg.gsc_inner_sweeps = static_cast<int>(config_int(value, key));
    } else if (key == "kmeans_restarts") {
      cfg.kmeans_restarts = static_cast<int>(config_int(value, key));
    } else if (key == "kmeans_max_iters") {
      cfg.kmeans_max_iters = static_cast<int>(config_int(value, key));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!saw_algorithm) throw ConfigError("config must set 'algorithm'");
  if (!saw_k) throw ConfigError("config must set 'k_clusters'");
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

DataSet sample_trial(const DataSet& ds, int k_clusters, int labels_per_class,
                     std::uint64_t seed) {
  if (!ds.has_labels()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "trial sampling needs ground-truth labels");
  }
  if (k_clusters < 1) throw std::invalid_argument("k_clusters must be positive");
  if (labels_per_class < 0) {
    throw std::invalid_argument("labels_per_class must be nonnegative");
  }
  const int classes = ds.class_count();
  if (classes < k_clusters) {
    throw DataError("dataset has " + std::to_string(classes) +
                    " classes; trial needs " + std::to_string(k_clusters));
  }

  Rng rng(seed);
  const std::vector<int> selected = rng.sample_indices(classes, k_clusters);

  std::vector<Eigen::Index> labeled_cols, unlabeled_cols;
  std::vector<int> labeled_ids, unlabeled_ids;
  for (int new_id = 0; new_id < k_clusters; ++new_id) {
    const int cls = selected[static_cast<std::size_t>(new_id)];
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < ds.sample_count(); ++i) {
      if (ds.label_of(i) == cls) members.push_back(i);
    }
    if (static_cast<int>(members.size()) < labels_per_class) {
      throw DataError("class '" + ds.class_names[static_cast<std::size_t>(cls)] +
                      "' has " + std::to_string(members.size()) +
                      " samples; trial needs " + std::to_string(labels_per_class));
    }
    std::vector<int> picks =
        rng.sample_indices(static_cast<int>(members.size()), labels_per_class);
    std::sort(picks.begin(), picks.end());
    std::vector<bool> is_labeled(members.size(), false);
    for (int p : picks) is_labeled[static_cast<std::size_t>(p)] = true;
    for (std::size_t s = 0; s < members.size(); ++s) {
      if (is_labeled[s]) {
        labeled_cols.push_back(members[s]);
        labeled_ids.push_back(new_id);
      } else {
        unlabeled_cols.push_back(members[s]);
        unlabeled_ids.push_back(new_id);
      }
    }
  }

  DataSet trial;
  trial.name = ds.name;
  const Eigen::Index total =
      static_cast<Eigen::Index>(labeled_cols.size() + unlabeled_cols.size());
  trial.X.resize(ds.feature_dim(), total);
  Eigen::Index out = 0;
  for (Eigen::Index col : labeled_cols) trial.X.col(out++) = ds.X.col(col);
  for (Eigen::Index col : unlabeled_cols) trial.X.col(out++) = ds.X.col(col);
  trial.labels = std::move(labeled_ids);
  trial.labels.insert(trial.labels.end(), unlabeled_ids.begin(),
                      unlabeled_ids.end());
  for (int c = 0; c < k_clusters; ++c) {
    trial.class_names.push_back(
        ds.class_names[static_cast<std::size_t>(selected[static_cast<std::size_t>(c)])]);
  }
  trial.labeled_prefix = static_cast<Eigen::Index>(labeled_cols.size());
  return trial;
}

int thread_cap() {
  if (const char* env = std::getenv("GRAPHSSL_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

RunRow run_single_trial(const DataSet& data, const ExperimentConfig& cfg,
                        int run) {
  RunRow row;
  row.run = run;
  row.seed = cfg.master_seed + static_cast<std::uint64_t>(run);
  try {
    const DataSet trial =
        sample_trial(data, cfg.k_clusters, cfg.labels_per_class, row.seed);

    KmeansConfig km;
    km.k = cfg.k_clusters;
    km.restarts = cfg.kmeans_restarts;
    km.max_iters = cfg.kmeans_max_iters;
    km.seed = row.seed;

    ClusteringResult clusters;
    if (cfg.algorithm == Algorithm::Kmeans) {
      clusters = kmeans(trial.X.transpose(), km);
    } else {
      AffinityGraph graph = [&] {
        switch (cfg.algorithm) {
          case Algorithm::Lgnmf:
          case Algorithm::Lgsc:
            return label_weight_graph(trial);
          case Algorithm::Fgnmf:
          case Algorithm::Fgsc:
            return build_learned_graph(trial, cfg.knn_k,
                                       cfg.kiss_regularization,
                                       cfg.sigma_override);
          default:
            return unsupervised_gaussian_graph(trial, cfg.knn_k,
                                               cfg.sigma_override);
        }
      }();
      const GraphLaplacian lap = build_laplacian(graph);
      if (cfg.algorithm == Algorithm::Gnmf || cfg.algorithm == Algorithm::Lgnmf ||
          cfg.algorithm == Algorithm::Fgnmf) {
        const NmfModel model =
            fit_fgnmf(trial.X, lap, cfg.k_clusters, cfg.lambda1,
                      cfg.nmf_max_iters, cfg.nmf_tol, row.seed);
        clusters = predict_clusters_nmf(model, km);
      } else {
        const SparseCodingModel model =
            fit_fgsc(trial.X, lap, cfg.k_clusters, cfg.lambda2, cfg.lambda3,
                     cfg.c, cfg.gsc_outer_iters, cfg.gsc_tol, row.seed,
                     cfg.gsc_inner_sweeps);
        clusters = predict_clusters_gsc(model, km);
      }
    }

    const AccuracyReport report = accuracy(clusters.assignments, trial.labels);
    row.ac = report.ac;
    row.ok = true;
    row.status = "ok";
  } catch (const std::exception& e) {
    row.ok = false;
    row.ac = std::nan("");
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');  // keep the CSV intact
    row.status = "error: " + msg;
  }
  return row;
}

}  // namespace

std::string ExperimentResult::to_csv() const {
  std::ostringstream out;
  out << "dataset,algorithm,k,labels_per_class,run,seed,ac,status\n";
  const std::string prefix = dataset + "," + to_string(algorithm) + "," +
                             std::to_string(k_clusters) + "," +
                             std::to_string(labels_per_class) + ",";
  for (const RunRow& row : rows) {
    out << prefix << row.run << "," << row.seed << ","
        << (row.ok ? format_double(row.ac) : "") << "," << row.status << "\n";
  }
  const int ok_runs = static_cast<int>(rows.size()) - failed_runs;
  out << prefix << "summary," << master_seed << ","
      << (ok_runs > 0 ? format_double(mean_ac) : "") << ",runs="
      << rows.size() << ";failed=" << failed_runs
      << ";std=" << format_double(std_ac) << "\n";
  return out.str();
}

ExperimentResult run_experiment(const DataSet& ds,
                                const ExperimentConfig& cfg) {
  validate(cfg);
  if (!ds.has_labels()) {
    throw DataError(DataError::Code::InsufficientLabels,
                    "experiments need ground-truth labels for accuracy");
  }

  DataSet data = ds;
  if (cfg.normalize) normalize_max(data);

  ExperimentResult result;
  result.dataset = ds.name;
  result.algorithm = cfg.algorithm;
  result.k_clusters = cfg.k_clusters;
  result.labels_per_class = cfg.labels_per_class;
  result.master_seed = cfg.master_seed;
  result.rows.resize(static_cast<std::size_t>(cfg.test_runs));

  const int workers = std::min(thread_cap(), cfg.test_runs);
  if (workers <= 1) {
    for (int r = 0; r < cfg.test_runs; ++r) {
      result.rows[static_cast<std::size_t>(r)] = run_single_trial(data, cfg, r);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.test_runs) return;
          result.rows[static_cast<std::size_t>(r)] = run_single_trial(data, cfg, r);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0, sum_sq = 0.0;
  int ok_runs = 0;
  for (const RunRow& row : result.rows) {
    if (row.ok) {
      sum += row.ac;
      sum_sq += row.ac * row.ac;
      ++ok_runs;
    } else {
      ++result.failed_runs;
    }
  }
  if (ok_runs > 0) result.mean_ac = sum / ok_runs;
  if (ok_runs > 1) {
    const double var =
        (sum_sq - sum * sum / ok_runs) / static_cast<double>(ok_runs - 1);
    result.std_ac = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return result;
}

}  // namespace graphssl
