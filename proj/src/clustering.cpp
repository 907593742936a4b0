#include "graphssl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "graphssl/rng.hpp"

namespace graphssl {

namespace {

// Squared distances from every point to one center row.
Eigen::VectorXd sq_dist_to(const Eigen::MatrixXd& points,
                           const Eigen::RowVectorXd& center) {
  return (points.rowwise() - center).rowwise().squaredNorm();
}

struct LloydRun {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> inertia_trace;
};

// Distance-weighted seeding: the first center is uniform, later centers are
// drawn proportionally to the squared distance from the chosen set. When all
// remaining mass is zero (duplicate points) the first unchosen index is taken.
Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  const Eigen::Index first =
      static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  taken[static_cast<std::size_t>(first)] = true;

  Eigen::VectorXd d2 = sq_dist_to(points, centroids.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (u < cum) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;  // u landed on accumulated round-off
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = 0;
    }
    centroids.row(c) = points.row(pick);
    taken[static_cast<std::size_t>(pick)] = true;
    d2 = d2.cwiseMin(sq_dist_to(points, centroids.row(c)));
  }
  return centroids;
}

void assign_points(const Eigen::MatrixXd& points,
                   const Eigen::MatrixXd& centroids, std::vector<int>& out,
                   double& inertia) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  Eigen::MatrixXd dist(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    dist.col(c) = sq_dist_to(points, centroids.row(c));
  }
  inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = dist(i, 0);
    for (Eigen::Index c = 1; c < k; ++c) {
      if (dist(i, c) < best_d) {  // ties keep the lowest index
        best_d = dist(i, c);
        best = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
    inertia += best_d;
  }
}

LloydRun lloyd(const Eigen::MatrixXd& points, int k, int max_iters, Rng rng) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  LloydRun run;
  run.centroids = seed_centroids(points, k, rng);
  run.assignments.assign(static_cast<std::size_t>(n), 0);
  assign_points(points, run.centroids, run.assignments, run.inertia);
  run.inertia_trace.push_back(run.inertia);

  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  std::vector<int> previous = run.assignments;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = run.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        run.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    // Re-seed each empty cluster to the point farthest from its assigned
    // centroid; each point is claimed at most once.
    std::vector<bool> claimed(static_cast<std::size_t>(n), false);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      double worst = -1.0;
      Eigen::Index worst_i = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (claimed[static_cast<std::size_t>(i)]) continue;
        const int a = run.assignments[static_cast<std::size_t>(i)];
        const double dd =
            (points.row(i) - run.centroids.row(a)).squaredNorm();
        if (dd > worst) {
          worst = dd;
          worst_i = i;
        }
      }
      run.centroids.row(c) = points.row(worst_i);
      claimed[static_cast<std::size_t>(worst_i)] = true;
    }

    previous = run.assignments;
    assign_points(points, run.centroids, run.assignments, run.inertia);
    run.inertia_trace.push_back(run.inertia);
    if (run.assignments == previous) break;
  }
  return run;
}

}  // namespace

ClusteringResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                        int max_iters, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n == 0 || points.cols() == 0) {
    throw std::invalid_argument("kmeans: points must be nonempty");
  }
  if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds point count");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");

  ClusteringResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  best.seed = seed;
  best.restarts_used = restarts;
  for (int r = 0; r < restarts; ++r) {
    LloydRun run =
        lloyd(points, k, max_iters, Rng(seed + static_cast<std::uint64_t>(r)));
    if (run.inertia < best.inertia) {  // strict: ties keep the earliest restart
      best.assignments = std::move(run.assignments);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.inertia_trace = std::move(run.inertia_trace);
    }
  }
  return best;
}

std::vector<int> max_score_assignment(const Eigen::MatrixXd& score) {
  const Eigen::Index n = score.rows();
  if (n == 0 || score.cols() != n) {
    throw std::invalid_argument("assignment: matrix must be square and nonempty");
  }
  // Hungarian algorithm with potentials on cost = max - score, O(n^3).
  const double shift = score.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  const auto cost = [&](Eigen::Index i, Eigen::Index j) {
    return shift - score(i, j);
  };

  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Eigen::Index> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Eigen::Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    if (match[static_cast<std::size_t>(j)] > 0) {
      row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] =
          static_cast<int>(j - 1);
    }
  }
  return row_to_col;
}

namespace {

// Dense ids in order of first appearance, so the result depends only on the
// partition structure, not on the value names.
std::vector<int> densify(const std::vector<int>& values, int& count) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(values.size());
  for (int value : values) {
    const auto it = ids.emplace(value, static_cast<int>(ids.size())).first;
    out.push_back(it->second);
  }
  count = static_cast<int>(ids.size());
  return out;
}

}  // namespace

AccuracyReport accuracy(const std::vector<int>& predicted,
                        const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("accuracy: inputs must be nonempty");
  }
  int k_pred = 0, k_true = 0;
  const std::vector<int> p = densify(predicted, k_pred);
  const std::vector<int> t = densify(truth, k_true);
  const int k = std::max(k_pred, k_true);

  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < p.size(); ++i) {
    counts(p[i], t[i]) += 1;
  }

  const std::vector<int> mapping = max_score_assignment(counts.cast<double>());
  long long matched = 0;
  for (int cluster = 0; cluster < k; ++cluster) {
    if (mapping[static_cast<std::size_t>(cluster)] >= 0) {
      matched += counts(cluster, mapping[static_cast<std::size_t>(cluster)]);
    }
  }

  AccuracyReport report;
  report.ac = static_cast<double>(matched) / static_cast<double>(p.size());
  report.confusion = counts;
  report.mapping.assign(static_cast<std::size_t>(k_pred), -1);
  for (int cluster = 0; cluster < k_pred; ++cluster) {
    const int label = mapping[static_cast<std::size_t>(cluster)];
    report.mapping[static_cast<std::size_t>(cluster)] =
        label < k_true ? label : -1;  // padded columns are not real classes
  }
  return report;
}

AccuracyReport accuracy(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& truth) {
  const auto to_ids = [](const std::vector<std::string>& values) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(values.size());
    for (const auto& value : values) {
      const auto it = ids.emplace(value, static_cast<int>(ids.size())).first;
      out.push_back(it->second);
    }
    return out;
  };
  return accuracy(to_ids(predicted), to_ids(truth));
}

}  // namespace graphssl
