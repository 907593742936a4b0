#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "graphssl/errors.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/rng.hpp"
#include "graphssl/synthetic.hpp"
#include "oracles.hpp"

using namespace graphssl;

namespace {

Eigen::MatrixXd collinear_points() {
  Eigen::MatrixXd X(1, 3);
  X << 0, 1, 10;
  return X;
}

int cross_class_edges(const AffinityGraph& g, const std::vector<int>& labels) {
  int count = 0;
  for (const auto& t : g.upper_triplets()) {
    if (labels[static_cast<std::size_t>(t.row())] !=
        labels[static_cast<std::size_t>(t.col())]) {
      ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("full adjacency of two points is the squared metric distance") {
  Eigen::MatrixXd X(2, 2);
  X << 0, 3, 0, 4;
  const Eigen::MatrixXd A = full_adjacency(X, MetricMatrix::identity(2));
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 25, 25, 0;
  CHECK(A == expected);
}

TEST_CASE("full adjacency rejects a single sample") {
  Eigen::MatrixXd X(2, 1);
  X.setZero();
  CHECK_THROWS_AS(full_adjacency(X, MetricMatrix::identity(2)),
                  std::invalid_argument);
}

TEST_CASE("full adjacency matches the brute-force double loop") {
  Rng rng(5);
  const Eigen::MatrixXd X = oracles::random_matrix(3, 4, rng);
  const Eigen::MatrixXd A = full_adjacency(X, MetricMatrix::identity(3));
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double expect = (X.col(i) - X.col(j)).squaredNorm();
      CHECK(A(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(A == A.transpose().eval());
  CHECK(A.diagonal().isZero(0.0));
}

TEST_CASE("kNN selection keeps the nearest neighbor of each row") {
  const Eigen::MatrixXd A =
      full_adjacency(collinear_points(), MetricMatrix::identity(1));
  const PatternMatrix P = knn_sparsify(A, 1);
  // Node 2 picks node 1; symmetrization yields edges {0-1, 1-2} only.
  PatternMatrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK(P == expected);
}

TEST_CASE("k = n-1 selects the complete graph") {
  Rng rng(6);
  const Eigen::MatrixXd X = oracles::random_matrix(2, 5, rng);
  const PatternMatrix P =
      knn_sparsify(full_adjacency(X, MetricMatrix::identity(2)), 4);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      CHECK(P(i, j) == (i == j ? 0 : 1));
    }
  }
}

TEST_CASE("kNN ties break toward the smaller index") {
  // Equilateral distances: every neighbor ties, so the smallest index wins.
  Eigen::MatrixXd A(3, 3);
  A << 0, 4, 4, 4, 0, 4, 4, 4, 0;
  const PatternMatrix P = knn_row_selection(A, 1);
  CHECK(P(0, 1) == 1);
  CHECK(P(0, 2) == 0);
  CHECK(P(1, 0) == 1);
  CHECK(P(2, 0) == 1);
}

TEST_CASE("kNN rejects k >= n") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_WITH_AS(knn_sparsify(A, 3), "k exceeds available neighbors",
                       DataError);
  CHECK_THROWS_AS(knn_sparsify(A, 0), std::invalid_argument);
}

TEST_CASE("row selection has exactly k ones, symmetrized between k and n-1") {
  Rng rng(8);
  const Eigen::MatrixXd X = oracles::random_matrix(4, 20, rng);
  const Eigen::MatrixXd A = full_adjacency(X, MetricMatrix::identity(4));
  for (int k : {1, 3, 7}) {
    const PatternMatrix R = knn_row_selection(A, k);
    const PatternMatrix P = knn_sparsify(A, k);
    for (Eigen::Index i = 0; i < 20; ++i) {
      int row_sel = 0, row_sym = 0;
      for (Eigen::Index j = 0; j < 20; ++j) {
        row_sel += R(i, j);
        row_sym += P(i, j);
      }
      CHECK(row_sel == k);
      CHECK(row_sym >= k);
      CHECK(row_sym <= 19);
      CHECK(P(i, i) == 0);
    }
    CHECK(P == PatternMatrix(P.transpose()));
  }
}

TEST_CASE("default bandwidth follows the printed formula") {
  Eigen::MatrixXd A(2, 2);
  A << 0, 25, 25, 0;
  CHECK(default_bandwidth(A) == 312.5);

  CHECK_THROWS_WITH_AS(default_bandwidth(Eigen::MatrixXd::Zero(3, 3)),
                       "degenerate dataset: zero bandwidth", DataError);

  // Homogeneity: scaling A by c scales sigma by c^2.
  Rng rng(9);
  Eigen::MatrixXd R = oracles::random_affinity(6, rng);
  CHECK(default_bandwidth(4.0 * R) ==
        doctest::Approx(16.0 * default_bandwidth(R)).epsilon(1e-12));
}

TEST_CASE("gaussian reweight spot values") {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  PatternMatrix P(2, 2);
  P << 0, 1, 1, 0;

  SUBCASE("zero distance gives weight one") {
    Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(2, 2);
    const AffinityGraph g = gaussian_reweight(P, A0, 2.0);
    CHECK(g.weight(0, 1) == 1.0);
  }
  SUBCASE("masked entries stay zero") {
    PatternMatrix none = PatternMatrix::Zero(2, 2);
    const AffinityGraph g = gaussian_reweight(none, A, 2.0);
    CHECK(g.weight(0, 1) == 0.0);
  }
  SUBCASE("distance 2 sigma^2 gives 1/e") {
    const double sigma = 1.7;
    Eigen::MatrixXd Ae(2, 2);
    Ae << 0, 2 * sigma * sigma, 2 * sigma * sigma, 0;
    const AffinityGraph g = gaussian_reweight(P, Ae, sigma);
    CHECK(g.weight(0, 1) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  }
  SUBCASE("nonpositive sigma is rejected") {
    CHECK_THROWS_AS(gaussian_reweight(P, A, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_reweight(P, A, -1.0), std::invalid_argument);
  }
}

TEST_CASE("label weight graph follows label equality on the prefix") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 3);

  SUBCASE("two same one different") {
    const DataSet ds = make_labeled_dataset(X, {0, 0, 1}, 3);
    const AffinityGraph g = label_weight_graph(ds);
    Eigen::MatrixXd expected(3, 3);
    expected << 0, 1, 0, 1, 0, 0, 0, 0, 0;
    CHECK(g.weights() == expected);
    CHECK(g.kind() == GraphKind::LabelWeight);
  }
  SUBCASE("unlabeled samples stay disconnected") {
    Eigen::MatrixXd X4 = Eigen::MatrixXd::Zero(2, 4);
    const DataSet ds = make_labeled_dataset(X4, {0, 1, 0, 1}, 2);
    const AffinityGraph g = label_weight_graph(ds);
    CHECK(g.weights() == Eigen::MatrixXd::Zero(4, 4));
  }
  SUBCASE("all same label connects everything off-diagonal") {
    const DataSet ds = make_labeled_dataset(X, {0, 0, 0}, 3);
    const AffinityGraph g = label_weight_graph(ds);
    Eigen::MatrixXd expected =
        Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    CHECK(g.weights() == expected);
  }
  SUBCASE("no labels is an error") {
    const DataSet ds = make_labeled_dataset(X, {}, 0);
    CHECK_THROWS_AS(label_weight_graph(ds), DataError);
  }
}

TEST_CASE("label weight graph is invariant under label renaming") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 5);
  const DataSet a = make_labeled_dataset(X, {0, 1, 0, 2, 1}, 5);
  const DataSet b = make_labeled_dataset(X, {2, 0, 2, 1, 0}, 5);  // renamed
  CHECK(label_weight_graph(a).weights() == label_weight_graph(b).weights());
}

TEST_CASE("unsupervised pipeline equals the learned pipeline under identity") {
  Rng rng(10);
  const Eigen::MatrixXd X = oracles::random_matrix(3, 12, rng);
  const DataSet ds = make_labeled_dataset(X, std::vector<int>(12, 0), 0);
  const AffinityGraph a = unsupervised_gaussian_graph(ds, 3);
  const AffinityGraph b = metric_gaussian_graph(
      X, MetricMatrix::identity(3), 3, {}, GraphKind::UnsupervisedGaussian);
  CHECK(a.weights() == b.weights());
  CHECK(a.sigma() == b.sigma());
}

TEST_CASE("unsupervised graph on collinear points matches hand enumeration") {
  const DataSet ds = make_labeled_dataset(collinear_points(), {0, 0, 1}, 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 1);
  CHECK(g.weight(0, 1) > 0.0);
  CHECK(g.weight(1, 2) > 0.0);
  CHECK(g.weight(0, 2) == 0.0);
  for (const auto& t : g.upper_triplets()) {
    CHECK(t.value() > 0.0);
    CHECK(t.value() <= 1.0);
  }
}

TEST_CASE("pipeline composition equals manually chained stages") {
  Rng rng(12);
  Eigen::MatrixXd X = oracles::random_matrix(4, 15, rng);
  std::vector<int> labels;
  for (int i = 0; i < 15; ++i) labels.push_back(i % 3);
  const DataSet ds = make_labeled_dataset(X, labels, 9);

  const int k = 4;
  const double reg = 1e-2;
  const AffinityGraph composed = build_learned_graph(ds, k, reg);

  const MetricMatrix M = learn_kiss_metric(ds, enumerate_pairs(ds), reg);
  const Eigen::MatrixXd A = full_adjacency(ds, M);
  const PatternMatrix P = knn_sparsify(A, k);
  const double sigma = default_bandwidth(A);
  const AffinityGraph manual =
      gaussian_reweight(P, A, sigma, GraphKind::Learned, k);

  CHECK(composed.weights() == manual.weights());
  CHECK(composed.sigma() == manual.sigma());
  CHECK(composed.adjacency() == manual.adjacency());
  CHECK(composed.pattern() == manual.pattern());
  CHECK(composed.kind() == GraphKind::Learned);
}

TEST_CASE("learned graph drops at least as many cross-blob edges") {
  BlobSpec spec;
  spec.feature_dim = 8;
  spec.classes = 2;
  spec.per_class = 30;
  spec.separation = 2.5;
  spec.informative_noise = 1.0;
  spec.nuisance_noise = 3.0;
  spec.seed = 77;
  DataSet ds = make_gaussian_blobs(spec);
  // Give the metric learner 5 labels per class: first 5 of each block.
  Eigen::MatrixXd X(ds.feature_dim(), ds.sample_count());
  std::vector<int> labels;
  Eigen::Index out = 0;
  for (int c = 0; c < 2; ++c) {
    for (int s = 0; s < 5; ++s) {
      X.col(out++) = ds.X.col(c * 30 + s);
      labels.push_back(c);
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (int s = 5; s < 30; ++s) {
      X.col(out++) = ds.X.col(c * 30 + s);
      labels.push_back(c);
    }
  }
  const DataSet trial = make_labeled_dataset(std::move(X), labels, 10);

  const AffinityGraph learned = build_learned_graph(trial, 5, 1e-2);
  const AffinityGraph unsup = unsupervised_gaussian_graph(trial, 5);
  CHECK(cross_class_edges(learned, trial.labels) <=
        cross_class_edges(unsup, trial.labels));
}

TEST_CASE("two samples with k=1 produce the single forced edge") {
  Eigen::MatrixXd X(2, 2);
  X << 0, 3, 0, 4;
  const DataSet ds = make_labeled_dataset(X, {0, 1}, 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 1);
  CHECK(g.edge_count() == 1);
  const double sigma = 312.5;  // (0 + 625 + 625 + 0) / 4
  CHECK(g.sigma() == sigma);
  CHECK(g.weight(0, 1) == std::exp(-25.0 / (2 * sigma * sigma)));
}

TEST_CASE("sigma override replaces the bandwidth rule") {
  Rng rng(14);
  const Eigen::MatrixXd X = oracles::random_matrix(3, 10, rng);
  const DataSet ds = make_labeled_dataset(X, std::vector<int>(10, 0), 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 3, 2.5);
  CHECK(g.sigma() == 2.5);
}

TEST_CASE("graph weights are symmetric and monotone in distance") {
  Rng rng(15);
  const Eigen::MatrixXd X = oracles::random_matrix(4, 25, rng);
  const DataSet ds = make_labeled_dataset(X, std::vector<int>(25, 0), 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 4);

  CHECK(g.weights() == Eigen::MatrixXd(g.weights().transpose()));

  const auto edges = g.upper_triplets();
  for (std::size_t a = 0; a < edges.size(); ++a) {
    for (std::size_t b = a + 1; b < edges.size(); ++b) {
      const double da = g.adjacency()(edges[a].row(), edges[a].col());
      const double db = g.adjacency()(edges[b].row(), edges[b].col());
      if (da < db) CHECK(edges[a].value() > edges[b].value());
      if (da > db) CHECK(edges[a].value() < edges[b].value());
    }
  }
}

TEST_CASE("from_weights validates the affinity contract") {
  Eigen::MatrixXd W(2, 2);
  W << 0, 1, 1, 0;
  CHECK_NOTHROW(AffinityGraph::from_weights(W, GraphKind::UnsupervisedGaussian));

  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_WITH_AS(
      AffinityGraph::from_weights(asym, GraphKind::UnsupervisedGaussian),
      "affinity not symmetric", DataError);

  Eigen::MatrixXd neg(2, 2);
  neg << 0, -1, -1, 0;
  CHECK_THROWS_AS(AffinityGraph::from_weights(neg, GraphKind::UnsupervisedGaussian),
                  DataError);

  Eigen::MatrixXd diag(2, 2);
  diag << 1, 1, 1, 0;
  CHECK_THROWS_AS(AffinityGraph::from_weights(diag, GraphKind::UnsupervisedGaussian),
                  DataError);
}

TEST_CASE("graph file round-trip is bit-exact") {
  Rng rng(16);
  const Eigen::MatrixXd X = oracles::random_matrix(5, 18, rng);
  const DataSet ds = make_labeled_dataset(X, std::vector<int>(18, 0), 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 3);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "graphssl_graph_rt1.txt").string();
  const std::string p2 = (dir / "graphssl_graph_rt2.txt").string();
  save_graph(g, p1);
  const AffinityGraph loaded = load_graph(p1);
  save_graph(loaded, p2);

  std::ifstream f1(p1), f2(p2);
  const std::string c1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string c2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
  CHECK(!c1.empty());

  CHECK(loaded.size() == g.size());
  CHECK(loaded.sigma() == g.sigma());
  CHECK(loaded.kind() == g.kind());
  CHECK(loaded.knn_k() == g.knn_k());
  CHECK(loaded.weights() == g.weights());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("large graphs switch to sparse storage") {
  // Just over the dense limit, tiny feature dim to keep this fast.
  const Eigen::Index n = AffinityGraph::kDenseStorageLimit + 4;
  Rng rng(18);
  Eigen::MatrixXd X(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    X(0, j) = rng.uniform01() * 100.0;
    X(1, j) = rng.uniform01() * 100.0;
  }
  const DataSet ds =
      make_labeled_dataset(X, std::vector<int>(static_cast<std::size_t>(n), 0), 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 2);
  CHECK_FALSE(g.dense_storage());
  CHECK(g.size() == n);
  CHECK_THROWS_AS(g.weights(), std::logic_error);

  // Spot-check one recorded edge against the direct formula.
  const auto edges = g.upper_triplets();
  REQUIRE(!edges.empty());
  const auto& e = edges.front();
  const double dist = (X.col(e.row()) - X.col(e.col())).squaredNorm();
  CHECK(e.value() ==
        doctest::Approx(std::exp(-dist / (2 * g.sigma() * g.sigma())))
            .epsilon(1e-12));

  // Degrees from sparse storage match a manual accumulation.
  Eigen::VectorXd manual = Eigen::VectorXd::Zero(n);
  for (const auto& t : edges) {
    manual(t.row()) += t.value();
    manual(t.col()) += t.value();
  }
  CHECK((g.degrees() - manual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weights_sparse agrees with the stored weights in both modes") {
  Rng rng(19);
  const Eigen::MatrixXd X = oracles::random_matrix(3, 10, rng);
  const DataSet ds = make_labeled_dataset(X, std::vector<int>(10, 0), 0);
  const AffinityGraph g = unsupervised_gaussian_graph(ds, 3);
  REQUIRE(g.dense_storage());
  const Eigen::SparseMatrix<double> sp = g.weights_sparse();
  CHECK(Eigen::MatrixXd(sp) == g.weights());
  CHECK(sp.nonZeros() == 2 * g.edge_count());
}
