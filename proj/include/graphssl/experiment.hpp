#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphssl/dataset.hpp"

namespace graphssl {

enum class Algorithm { Kmeans, Gnmf, Lgnmf, Fgnmf, Gsc, Lgsc, Fgsc };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

bool algorithm_uses_labels(Algorithm a);  // label-weight and learned graphs
bool algorithm_uses_graph(Algorithm a);   // everything except kmeans

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Kmeans;
  int k_clusters = 0;  // required
  int labels_per_class = 2;
  int test_runs = 1;
  int knn_k = 5;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.1;
  double c = 1.0;
  double kiss_regularization = 1e-3;
  std::optional<double> sigma_override;
  std::uint64_t master_seed = 0;
  bool normalize = true;

  int nmf_max_iters = 300;
  double nmf_tol = 1e-5;
  int gsc_outer_iters = 100;
  double gsc_tol = 1e-5;
  int gsc_inner_sweeps = 3;
  int kmeans_restarts = 10;
  int kmeans_max_iters = 100;
};

// Flat key=value text, one key per line, '#' starts a comment. Unknown keys
// and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Deterministic trial: picks k_clusters classes, gathers all their samples,
// marks labels_per_class random samples per class as labeled and reorders so
// the labeled samples form the prefix (l = k_clusters * labels_per_class).
// Class ids are renumbered in selection order.
DataSet sample_trial(const DataSet& ds, int k_clusters, int labels_per_class,
                     std::uint64_t seed);

struct RunRow {
  int run = 0;
  std::uint64_t seed = 0;
  double ac = 0.0;
  bool ok = false;
  std::string status;  // "ok" or "error: ..."
};

struct ExperimentResult {
  std::string dataset;
  Algorithm algorithm = Algorithm::Kmeans;
  int k_clusters = 0;
  int labels_per_class = 0;
  std::uint64_t master_seed = 0;
  std::vector<RunRow> rows;  // one per run, in run order
  int failed_runs = 0;
  double mean_ac = 0.0;  // over successful runs
  double std_ac = 0.0;   // sample standard deviation over successful runs

  // Fixed column order: dataset,algorithm,k,labels_per_class,run,seed,ac,
  // status; one row per run plus a trailing summary row. Byte-deterministic
  // for identical inputs.
  std::string to_csv() const;
};

// Runs test_runs trials with seeds master_seed + run index: sample_trial,
// build the configured graph, fit the configured model, k-means on the
// representation, accuracy against the trial's ground truth. A failed stage
// marks that run failed without aborting the experiment. Trials may execute
// in parallel (capped by GRAPHSSL_THREADS); row order is always by run index.
ExperimentResult run_experiment(const DataSet& ds,
                                const ExperimentConfig& cfg);

// Worker count: GRAPHSSL_THREADS when set (minimum 1), else the hardware
// concurrency.
int thread_cap();

}  // namespace graphssl
