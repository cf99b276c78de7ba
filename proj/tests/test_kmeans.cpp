#include <doctest.h>

#include <algorithm>
#include <set>

#include "hbfsim/errors.hpp"
#include "hbfsim/kmeans.hpp"
#include "hbfsim/rng.hpp"
#include "support.hpp"

using namespace hbfsim;

TEST_CASE("k distinct points with k clusters reproduce the points") {
  const std::vector<float> pts = {0, 0, 5, 5, -3, 2, 9, -1, 4, 4};
  const auto r = train_kmeans(pts, 2, {5, 25, 11, 1});
  std::multiset<std::pair<float, float>> want, got;
  for (std::size_t i = 0; i < 5; ++i) {
    want.insert({pts[2 * i], pts[2 * i + 1]});
    got.insert({r.centroids[2 * i], r.centroids[2 * i + 1]});
  }
  CHECK(got == want);
  CHECK(r.inertia_history.back() == 0.0);
}

TEST_CASE("two separated blobs are split with full purity") {
  Rng rng(5);
  std::vector<float> pts;
  for (int blob = 0; blob < 2; ++blob) {
    for (int i = 0; i < 200; ++i) {
      pts.push_back(static_cast<float>(blob * 100 + rng.normal()));
      pts.push_back(static_cast<float>(blob * 100 + rng.normal()));
    }
  }
  const auto r = train_kmeans(pts, 2, {2, 25, 1, 1});
  for (int i = 0; i < 200; ++i) CHECK(r.assignment[i] == r.assignment[0]);
  for (int i = 200; i < 400; ++i) CHECK(r.assignment[i] == r.assignment[200]);
  CHECK(r.assignment[0] != r.assignment[200]);
  // each centroid lies inside its blob's bounding box
  for (std::size_t c = 0; c < 2; ++c) {
    const int blob = r.assignment[0] == c ? 0 : 1;
    float lo = 1e9f, hi = -1e9f;
    for (int i = blob * 200; i < blob * 200 + 200; ++i) {
      lo = std::min(lo, pts[2 * i]);
      hi = std::max(hi, pts[2 * i]);
    }
    CHECK(r.centroids[2 * c] >= lo);
    CHECK(r.centroids[2 * c] <= hi);
  }
}

TEST_CASE("k-means is deterministic and thread-independent") {
  const auto pts = testing::random_floats(3000 * 8, 17);
  const auto a = train_kmeans(pts, 8, {32, 10, 4, 1});
  const auto b = train_kmeans(pts, 8, {32, 10, 4, 1});
  const auto c = train_kmeans(pts, 8, {32, 10, 4, 7});
  CHECK(a.centroids == b.centroids);
  CHECK(a.centroids == c.centroids);
  CHECK(a.assignment == c.assignment);
  CHECK(a.inertia_history == c.inertia_history);
  const auto d = train_kmeans(pts, 8, {32, 10, 5, 1});
  CHECK_FALSE(a.centroids == d.centroids);
}

TEST_CASE("k-means argument checks") {
  const std::vector<float> pts = {1, 2, 3};
  CHECK_THROWS_AS(train_kmeans(pts, 1, {4, 5, 0, 1}), ArgumentError);
  CHECK_THROWS_AS(train_kmeans(pts, 1, {0, 5, 0, 1}), ArgumentError);
  CHECK_THROWS_AS(train_kmeans(pts, 0, {1, 5, 0, 1}), ArgumentError);
}

TEST_CASE("nearest_centroid ties to the lower index") {
  const std::vector<float> cents = {0, 0, 2, 0, 2, 0};
  const std::vector<float> x = {1, 0};
  CHECK(nearest_centroid(x, cents, 3) == 0);
  const std::vector<float> y = {2, 0};
  CHECK(nearest_centroid(y, cents, 3) == 1);
}
