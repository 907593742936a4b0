#include "graphssl/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "graphssl/rng.hpp"

namespace graphssl {

DataSet make_gaussian_blobs(const BlobSpec& spec) {
  if (spec.feature_dim < 2 || spec.classes < 1 || spec.per_class < 1) {
    throw std::invalid_argument("blob spec needs >= 2 dims and positive counts");
  }
  const int n = spec.classes * spec.per_class;
  Eigen::MatrixXd X(spec.feature_dim, n);
  std::vector<int> labels(static_cast<std::size_t>(n));

  Rng rng(spec.seed);
  int col = 0;
  for (int c = 0; c < spec.classes; ++c) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(c) / spec.classes;
    const double mean0 = spec.offset + spec.separation * std::cos(angle);
    const double mean1 = spec.offset + spec.separation * std::sin(angle);
    for (int s = 0; s < spec.per_class; ++s, ++col) {
      labels[static_cast<std::size_t>(col)] = c;
      for (int d = 0; d < spec.feature_dim; ++d) {
        double value;
        if (d == 0) value = mean0 + spec.informative_noise * rng.gaussian();
        else if (d == 1) value = mean1 + spec.informative_noise * rng.gaussian();
        else value = spec.offset + spec.nuisance_noise * rng.gaussian();
        X(d, col) = value < 0.0 ? 0.0 : value;  // keep valid NMF input
      }
    }
  }
  return make_labeled_dataset(std::move(X), std::move(labels), 0, "blobs");
}

}  // namespace graphssl
