#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hbfsim {

struct KMeansParams {
  std::size_t k = 1;
  std::size_t max_iters = 25;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;         // k x dim
  std::vector<std::uint32_t> assignment;  // per training point
  // Inertia (sum of squared distances to the assigned centroid) after each
  // assignment step.
  std::vector<double> inertia_history;
};

// Lloyd's k-means with k-means++ seeding. Stops early once assignments are
// stable. An empty cluster takes over the point of the largest cluster that is
// farthest from its centroid, which never increases inertia.
KMeansResult train_kmeans(std::span<const float> data, std::size_t dim,
                          const KMeansParams& params);

// Index of the nearest of `k` centroids to x under squared L2; ties to lower
// index.
std::uint32_t nearest_centroid(std::span<const float> x, std::span<const float> centroids,
                               std::size_t k);

}  // namespace hbfsim
