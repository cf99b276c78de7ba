#include "hbfsim/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "hbfsim/distance.hpp"
#include "hbfsim/errors.hpp"
#include "hbfsim/parallel.hpp"
#include "hbfsim/rng.hpp"

namespace hbfsim {

namespace {

// Training-only kernel: eight independent partial sums in a fixed order.
// Deterministic, but not bit-equal to squared_l2.
float l2_training(const float* a, const float* b, std::size_t dim) {
  float acc[8] = {0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t lane = 0; lane < 8; ++lane) {
      const float diff = a[i + lane] - b[i + lane];
      acc[lane] += diff * diff;
    }
  }
  float sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < dim; ++i) {
    const float diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

// D^2 sampling of one index given the current nearest-center distances.
std::size_t sample_d2(const std::vector<double>& min_dist, double total, Rng& rng) {
  const double target = rng.uniform() * total;
  double running = 0.0;
  std::size_t next = min_dist.size();
  for (std::size_t i = 0; i < min_dist.size(); ++i) {
    if (min_dist[i] <= 0.0) continue;
    running += min_dist[i];
    next = i;
    if (running > target) break;
  }
  return next;
}

// Greedy k-means++: each step draws 2 + floor(ln k) candidates by D^2
// sampling and keeps the one that lowers the potential most.
std::vector<float> seed_plus_plus(std::span<const float> data, std::size_t n, std::size_t dim,
                                  std::size_t k, std::size_t threads, Rng& rng) {
  std::vector<float> centroids(k * dim);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> trial_dist(trials * n);
  std::vector<std::size_t> cand(trials);

  auto place = [&](std::size_t c, std::size_t pick) {
    chosen[pick] = true;
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pick * dim), dim,
                centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };
  place(0, rng.below(n));
  parallel_for(n, threads, [&](std::size_t i) {
    min_dist[i] = l2_training(data.data() + i * dim, centroids.data(), dim);
  });
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_dist) total += d;
    if (!(total > 0.0)) {
      // Every point coincides with a chosen center: take the first unused one.
      place(c, static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) -
                                        chosen.begin()));
      continue;
    }
    for (auto& t : cand) t = sample_d2(min_dist, total, rng);
    parallel_for(n, threads, [&](std::size_t i) {
      const float* x = data.data() + i * dim;
      for (std::size_t t = 0; t < trials; ++t) {
        const double d = l2_training(x, data.data() + cand[t] * dim, dim);
        trial_dist[t * n + i] = std::min(min_dist[i], d);
      }
    });
    std::size_t best = 0;
    double best_pot = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      double pot = 0.0;
      for (std::size_t i = 0; i < n; ++i) pot += trial_dist[t * n + i];
      if (pot < best_pot) {
        best_pot = pot;
        best = t;
      }
    }
    place(c, cand[best]);
    std::copy_n(trial_dist.begin() + static_cast<std::ptrdiff_t>(best * n), n, min_dist.begin());
  }
  return centroids;
}

}  // namespace

std::uint32_t nearest_centroid(std::span<const float> x, std::span<const float> centroids,
                               std::size_t k) {
  const std::size_t dim = x.size();
  std::uint32_t best = 0;
  float best_dist = std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const float d = squared_l2(x, centroids.subspan(c * dim, dim));
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

KMeansResult train_kmeans(std::span<const float> data, std::size_t dim,
                          const KMeansParams& params) {
  if (dim == 0) throw ArgumentError("k-means needs dim >= 1");
  const std::size_t n = data.size() / dim;
  const std::size_t k = params.k;
  if (k == 0) throw ArgumentError("k-means needs k >= 1");
  if (k > n) throw ArgumentError(fmt::format("k = {} exceeds point count {}", k, n));
  if (params.max_iters == 0) throw ArgumentError("k-means needs at least one iteration");

  Rng rng(params.seed);
  KMeansResult result;
  result.k = k;
  result.dim = dim;
  result.centroids = seed_plus_plus(data, n, dim, k, params.threads, rng);

  std::vector<std::uint32_t> assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::uint32_t> next(n);
  std::vector<float> dist(n);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  std::vector<float> transposed(dim * k);  // dim x k
  for (std::size_t iter = 0; iter < params.max_iters; ++iter) {
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < dim; ++j) transposed[j * k + c] = result.centroids[c * dim + j];
    parallel_for(n, params.threads, [&](std::size_t i) {
      thread_local std::vector<float> acc;
      acc.assign(k, 0.0f);
      const float* x = data.data() + i * dim;
      // Dimension-outer so the inner loop runs across centroids; each
      // centroid's sum still accumulates left to right.
      for (std::size_t j = 0; j < dim; ++j) {
        const float xj = x[j];
        const float* row = transposed.data() + j * k;
        for (std::size_t c = 0; c < k; ++c) {
          const float diff = xj - row[c];
          acc[c] += diff * diff;
        }
      }
      std::uint32_t best = 0;
      float best_dist = acc[0];
      for (std::size_t c = 1; c < k; ++c) {
        if (acc[c] < best_dist) {
          best_dist = acc[c];
          best = static_cast<std::uint32_t>(c);
        }
      }
      next[i] = best;
      dist[i] = best_dist;
    });
    double inertia = 0.0;
    for (float d : dist) inertia += d;
    result.inertia_history.push_back(inertia);
    if (next == assign) break;
    assign.swap(next);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += data[i * dim + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) {
        result.centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] * inv);
      }
    }
    // Empty-cluster repair: split the largest cluster at its farthest point.
    for (std::size_t e = 0; e < k; ++e) {
      if (counts[e] != 0) continue;
      const auto largest = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (counts[largest] <= 1) break;
      std::size_t far = n;
      float far_dist = -1.0f;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != largest) continue;
        const float d =
            l2_training(data.data() + i * dim, result.centroids.data() + largest * dim, dim);
        if (d > far_dist) {
          far_dist = d;
          far = i;
        }
      }
      std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(far * dim), dim,
                  result.centroids.begin() + static_cast<std::ptrdiff_t>(e * dim));
      assign[far] = static_cast<std::uint32_t>(e);
      --counts[largest];
      ++counts[e];
    }
  }
  result.assignment = std::move(assign);
  return result;
}

}  // namespace hbfsim
