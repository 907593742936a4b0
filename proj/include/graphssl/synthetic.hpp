#pragma once

#include <cstdint>

#include "graphssl/dataset.hpp"

namespace graphssl {

// Gaussian blobs with class means on a circle in the first two coordinates.
// The remaining dimensions carry pure noise, so metric learning has signal
// to separate informative from nuisance directions. `offset` shifts every
// coordinate and entries are clamped at zero, keeping the data valid NMF
// input.
struct BlobSpec {
  int feature_dim = 10;
  int classes = 3;
  int per_class = 40;
  double separation = 2.0;        // circle radius of the class means
  double informative_noise = 1.0; // stddev in the two mean-bearing dims
  double nuisance_noise = 3.0;    // stddev everywhere else
  double offset = 15.0;
  std::uint64_t seed = 0;
};

DataSet make_gaussian_blobs(const BlobSpec& spec);

}  // namespace graphssl
