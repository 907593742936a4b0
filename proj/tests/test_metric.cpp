#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdio>
#include <filesystem>

#include "graphssl/errors.hpp"
#include "graphssl/metric.hpp"
#include "graphssl/rng.hpp"
#include "oracles.hpp"

using namespace graphssl;

namespace {

DataSet tiny_dataset(const Eigen::MatrixXd& X, std::vector<int> labels,
                     Eigen::Index prefix) {
  return make_labeled_dataset(X, std::move(labels), prefix);
}

// Two classes of 2-D Gaussians separated only along dimension 0.
DataSet two_class_gaussians(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(2, 2 * per_class);
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    const double mean0 = c == 0 ? 0.0 : 5.0;
    for (int s = 0; s < per_class; ++s) {
      const int col = c * per_class + s;
      X(0, col) = mean0 + rng.gaussian();
      X(1, col) = 1.0 + rng.gaussian();
      labels.push_back(c);
    }
  }
  return make_labeled_dataset(std::move(X), std::move(labels), 2 * per_class);
}

// Straightforward reimplementation of the KISS estimator: plain loops,
// direct inverse, eigenvalue clipping.
Eigen::MatrixXd kiss_oracle(const DataSet& ds, const LabeledPairs& pairs,
                            double reg) {
  const Eigen::Index m = ds.feature_dim();
  const auto covariance = [&](const std::vector<std::pair<int, int>>& list) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [i, j] : list) {
      const Eigen::VectorXd d = ds.X.col(i) - ds.X.col(j);
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(list.size());
    cov += reg * cov.trace() / static_cast<double>(m) *
           Eigen::MatrixXd::Identity(m, m);
    return cov;
  };
  const Eigen::MatrixXd raw = covariance(pairs.similar).inverse() -
                              covariance(pairs.dissimilar).inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (raw + raw.transpose()));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("enumerate_pairs splits labeled pairs by label equality") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 3);
  const auto pairs = enumerate_pairs(tiny_dataset(X, {0, 0, 1}, 3));
  REQUIRE(pairs.similar.size() == 1);
  CHECK(pairs.similar[0] == std::pair<int, int>(0, 1));
  REQUIRE(pairs.dissimilar.size() == 2);
  CHECK(pairs.dissimilar[0] == std::pair<int, int>(0, 2));
  CHECK(pairs.dissimilar[1] == std::pair<int, int>(1, 2));
}

TEST_CASE("enumerate_pairs rejects degenerate label sets") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_WITH_AS(enumerate_pairs(tiny_dataset(X, {0, 1, 2}, 3)),
                       "insufficient similar pairs", DataError);
  CHECK_THROWS_WITH_AS(enumerate_pairs(tiny_dataset(X, {0, 0, 0}, 3)),
                       "insufficient label diversity", DataError);
  CHECK_THROWS_AS(enumerate_pairs(tiny_dataset(X, {0, 0, 1}, 1)), DataError);
}

TEST_CASE("enumerate_pairs counts all C(4,2) pairs") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 4);
  const auto pairs = enumerate_pairs(tiny_dataset(X, {0, 0, 1, 1}, 4));
  CHECK(pairs.similar.size() == 2);
  CHECK(pairs.dissimilar.size() == 4);
}

TEST_CASE("enumerate_pairs only touches the labeled prefix") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 6);
  const auto pairs = enumerate_pairs(tiny_dataset(X, {0, 0, 1, 1, 0, 1}, 4));
  CHECK(pairs.similar.size() == 2);
  CHECK(pairs.dissimilar.size() == 4);
  for (const auto& [i, j] : pairs.dissimilar) {
    CHECK(i < 4);
    CHECK(j < 4);
  }
}

TEST_CASE("identity metric is the identity matrix") {
  const MetricMatrix M = MetricMatrix::identity(3);
  CHECK(M.matrix() == Eigen::MatrixXd::Identity(3, 3));
  CHECK(M.provenance() == MetricProvenance::Identity);
}

TEST_CASE("learned metric matches the reference estimator") {
  const DataSet ds = two_class_gaussians(50, 91);
  const auto pairs = enumerate_pairs(ds);
  const MetricMatrix M = learn_kiss_metric(ds, pairs, 1e-3);
  const Eigen::MatrixXd expected = kiss_oracle(ds, pairs, 1e-3);

  CHECK((M.matrix() - expected).cwiseAbs().maxCoeff() < 1e-8);
  // Separation lives along dimension 0, so it must carry the largest weight.
  CHECK(M.matrix()(0, 0) > M.matrix()(1, 1));
  CHECK(M.provenance() == MetricProvenance::KissLearned);
}

TEST_CASE("learned metric is symmetric PSD") {
  const DataSet ds = two_class_gaussians(30, 7);
  const MetricMatrix M = learn_kiss_metric(ds, enumerate_pairs(ds), 1e-3);
  CHECK((M.matrix() - M.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M.matrix());
  const double largest = std::max(1.0, eig.eigenvalues().maxCoeff());
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * largest);
}

TEST_CASE("singular covariance without shrinkage is reported") {
  // 5 features but a single similar pair: rank-1 covariance, not invertible.
  Rng rng(3);
  Eigen::MatrixXd X = oracles::random_matrix(5, 4, rng);
  const DataSet ds = tiny_dataset(X, {0, 0, 1, 1}, 4);
  const auto pairs = enumerate_pairs(ds);
  CHECK_THROWS_AS(learn_kiss_metric(ds, pairs, 0.0), DataError);
  try {
    learn_kiss_metric(ds, pairs, 0.0);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(
              "covariance singular; raise regularization") != std::string::npos);
    CHECK(e.code() == DataError::Code::SingularCovariance);
  }
  // Shrinkage makes the same problem solvable.
  CHECK_NOTHROW(learn_kiss_metric(ds, pairs, 1e-3));
}

TEST_CASE("metric_distance_sq spot values") {
  const MetricMatrix I2 = MetricMatrix::identity(2);
  Eigen::VectorXd a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(metric_distance_sq(I2, a, b) == doctest::Approx(2.0));

  CHECK(metric_distance_sq(I2, a, a) == 0.0);

  Eigen::MatrixXd d(2, 2);
  d << 2, 0, 0, 1;
  const MetricMatrix diag =
      MetricMatrix::from_matrix(d, MetricProvenance::Identity);
  Eigen::VectorXd p(2), q(2);
  p << 1, 1;
  q << 0, 0;
  CHECK(metric_distance_sq(diag, p, q) == doctest::Approx(3.0));

  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(metric_distance_sq(I2, a, wrong), std::invalid_argument);
}

TEST_CASE("identity metric equals squared Euclidean distance") {
  Rng rng(11);
  const MetricMatrix M = MetricMatrix::identity(6);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd a = oracles::random_matrix(6, 1, rng);
    const Eigen::VectorXd b = oracles::random_matrix(6, 1, rng);
    const double expect = (a - b).squaredNorm();
    CHECK(metric_distance_sq(M, a, b) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("metric distance is symmetric and nonnegative") {
  const DataSet ds = two_class_gaussians(25, 13);
  const MetricMatrix M = learn_kiss_metric(ds, enumerate_pairs(ds), 1e-2);
  Rng rng(17);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd a = oracles::random_matrix(2, 1, rng);
    const Eigen::VectorXd b = oracles::random_matrix(2, 1, rng);
    const double ab = metric_distance_sq(M, a, b);
    const double ba = metric_distance_sq(M, b, a);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("scaling the metric scales every distance") {
  const DataSet ds = two_class_gaussians(25, 29);
  const MetricMatrix M = learn_kiss_metric(ds, enumerate_pairs(ds), 1e-2);
  const double scale = 3.5;
  const MetricMatrix scaled =
      MetricMatrix::from_matrix(scale * M.matrix(), MetricProvenance::KissLearned);
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd a = oracles::random_matrix(2, 1, rng);
    const Eigen::VectorXd b = oracles::random_matrix(2, 1, rng);
    CHECK(metric_distance_sq(scaled, a, b) ==
          doctest::Approx(scale * metric_distance_sq(M, a, b)).epsilon(1e-12));
  }
}

TEST_CASE("metric CSV round-trip") {
  const DataSet ds = two_class_gaussians(20, 41);
  const MetricMatrix M = learn_kiss_metric(ds, enumerate_pairs(ds), 1e-3);
  const auto path =
      (std::filesystem::temp_directory_path() / "graphssl_metric_rt.csv")
          .string();
  save_metric_csv(M, path);
  const MetricMatrix loaded = load_metric_csv(path);
  CHECK(loaded.dim() == M.dim());
  CHECK(loaded.matrix() == M.matrix());
  CHECK(loaded.provenance() == MetricProvenance::KissLearned);

  save_metric_csv(MetricMatrix::identity(4), path);
  CHECK(load_metric_csv(path).provenance() == MetricProvenance::Identity);
  std::remove(path.c_str());
}
