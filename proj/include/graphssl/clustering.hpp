#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace graphssl {

struct KmeansConfig {
  int k = 2;
  int restarts = 10;
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct ClusteringResult {
  std::vector<int> assignments;  // one cluster index in [0, k) per point
  Eigen::MatrixXd centroids;     // k x d
  double inertia = 0.0;          // sum of squared distances to assigned centroid
  int restarts_used = 0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_trace;  // per Lloyd iteration, winning restart
};

// Lloyd's algorithm with distance-weighted (k-means++ style) seeding.
// Restart r uses seed + r; the best inertia wins, ties resolved by the
// lowest restart index. Empty clusters are re-seeded to the point farthest
// from its assigned centroid.
ClusteringResult kmeans(const Eigen::MatrixXd& points, int k,
                        int restarts = 10, int max_iters = 100,
                        std::uint64_t seed = 0);

inline ClusteringResult kmeans(const Eigen::MatrixXd& points,
                               const KmeansConfig& cfg) {
  return kmeans(points, cfg.k, cfg.restarts, cfg.max_iters, cfg.seed);
}

struct AccuracyReport {
  double ac = 0.0;
  // Cluster -> class mapping maximizing the matched count; -1 for clusters
  // left unmatched when there are more clusters than classes. Indices refer
  // to distinct values in order of first appearance in each input.
  std::vector<int> mapping;
  Eigen::MatrixXi confusion;  // square contingency table, cluster x class
};

// Clustering accuracy under the best cluster-to-class assignment, found with
// the Hungarian algorithm on the contingency table. Both vectors must be
// nonempty and of equal length; the result is invariant under renaming of
// either side's values.
AccuracyReport accuracy(const std::vector<int>& predicted,
                        const std::vector<int>& truth);
AccuracyReport accuracy(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& truth);

// Row -> column assignment maximizing the total score of a square matrix.
std::vector<int> max_score_assignment(const Eigen::MatrixXd& score);

}  // namespace graphssl
