#include <doctest.h>

#include <cstring>

#include "hbfsim/dataset.hpp"
#include "hbfsim/errors.hpp"
#include "hbfsim/kmeans.hpp"
#include "support.hpp"

using namespace hbfsim;

namespace {

std::string fvecs_record(std::int32_t dim, const std::vector<float>& vals) {
  std::string out(4 + 4 * vals.size(), '\0');
  std::memcpy(out.data(), &dim, 4);
  std::memcpy(out.data() + 4, vals.data(), 4 * vals.size());
  return out;
}

double final_inertia(const VectorDataset& ds, std::size_t k) {
  const auto f = ds.to_float();
  return train_kmeans(f, ds.dim(), {k, 25, 3, 1}).inertia_history.back();
}

}  // namespace

TEST_CASE("load_vectors reads a single fvecs record") {
  const auto dir = testing::temp_dir("one_record");
  testing::write_bytes(dir / "a.fvecs", fvecs_record(4, {1, 2, 3, 4}));
  const auto ds = load_vectors(dir / "a.fvecs", VecsFormat::Fvecs);
  CHECK(ds.dim() == 4);
  CHECK(ds.count() == 1);
  CHECK(ds.row(0) == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("empty file loads as an empty dataset with dim 0") {
  const auto dir = testing::temp_dir("empty");
  testing::write_bytes(dir / "e.fvecs", "");
  const auto ds = load_vectors(dir / "e.fvecs", VecsFormat::Fvecs);
  CHECK(ds.dim() == 0);
  CHECK(ds.count() == 0);
  CHECK(ds.empty());
}

TEST_CASE("bvecs round trip is byte exact") {
  const auto dir = testing::temp_dir("bvecs_rt");
  std::vector<std::uint8_t> bytes(1000 * 24);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 37 % 251);
  save_vectors(VectorDataset::from_bytes(24, bytes), dir / "a.bvecs", VecsFormat::Bvecs);
  const auto loaded = load_vectors(dir / "a.bvecs", VecsFormat::Bvecs);
  CHECK(loaded.count() == 1000);
  CHECK(loaded.kind() == ElementKind::UInt8);
  save_vectors(loaded, dir / "b.bvecs", VecsFormat::Bvecs);
  CHECK(testing::read_bytes(dir / "a.bvecs") == testing::read_bytes(dir / "b.bvecs"));
  // record size: 4-byte header + 24 elements
  CHECK(testing::read_bytes(dir / "a.bvecs").size() == 1000 * 28);
}

TEST_CASE("fvecs round trip is byte exact") {
  const auto dir = testing::temp_dir("fvecs_rt");
  const auto ds = testing::random_dataset(300, 7, 4);
  save_vectors(ds, dir / "a.fvecs", VecsFormat::Fvecs);
  const auto loaded = load_vectors(dir / "a.fvecs", VecsFormat::Fvecs);
  CHECK(loaded == ds);
}

TEST_CASE("malformed vector files raise FormatError") {
  const auto dir = testing::temp_dir("malformed");
  const std::string good = fvecs_record(3, {1, 2, 3});

  SUBCASE("truncated payload") {
    testing::write_bytes(dir / "t.fvecs", good + good.substr(0, 9));
    CHECK_THROWS_AS(load_vectors(dir / "t.fvecs", VecsFormat::Fvecs), FormatError);
  }
  SUBCASE("truncated header") {
    testing::write_bytes(dir / "h.fvecs", good + std::string(2, '\0'));
    CHECK_THROWS_AS(load_vectors(dir / "h.fvecs", VecsFormat::Fvecs), FormatError);
  }
  SUBCASE("inconsistent dimension") {
    testing::write_bytes(dir / "d.fvecs", good + fvecs_record(2, {1, 2}));
    CHECK_THROWS_AS(load_vectors(dir / "d.fvecs", VecsFormat::Fvecs), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_vectors(dir / "nope.fvecs", VecsFormat::Fvecs), FormatError);
  }
}

TEST_CASE("format inference from extensions") {
  CHECK(format_from_path("x/base.fvecs") == VecsFormat::Fvecs);
  CHECK(format_from_path("x/base.bvecs") == VecsFormat::Bvecs);
  CHECK(format_from_path("gt.ivecs") == VecsFormat::Ivecs);
  CHECK_THROWS_AS(format_from_path("base.bin"), ArgumentError);
}

TEST_CASE("generate_synthetic") {
  CHECK(generate_synthetic(0, 16, 42, SyntheticDistribution::uniform()).count() == 0);
  CHECK(generate_synthetic(100, 8, 7, SyntheticDistribution::uniform()) ==
        generate_synthetic(100, 8, 7, SyntheticDistribution::uniform()));
  CHECK_FALSE(generate_synthetic(100, 8, 7, SyntheticDistribution::uniform()) ==
              generate_synthetic(100, 8, 8, SyntheticDistribution::uniform()));
  CHECK_THROWS_AS(generate_synthetic(10, 0, 1, SyntheticDistribution::uniform()), ArgumentError);

  const auto u = generate_synthetic(2000, 5, 1, SyntheticDistribution::uniform());
  for (float v : u.floats()) {
    CHECK(v >= 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("mixture data clusters tighter than uniform data") {
  const auto mix = generate_synthetic(10000, 32, 1, SyntheticDistribution::gaussian_mixture(16));
  const auto uni = generate_synthetic(10000, 32, 1, SyntheticDistribution::uniform());
  const double mix_inertia = final_inertia(mix, 16);
  const double uni_inertia = final_inertia(uni, 16);
  CHECK(mix_inertia < uni_inertia);
  // Each of the 16 components contributes ~n * d * spread^2.
  CHECK(mix_inertia < 2.0 * 10000 * 32 * 0.01);
}

TEST_CASE("brute_force_knn small cases") {
  SUBCASE("query equal to base vector 17") {
    const auto base = testing::random_dataset(50, 6, 9);
    const auto q = base.slice(17, 18);
    const auto gt = brute_force_knn(base, q, 1, Metric::L2);
    CHECK(gt.ids(0)[0] == 17);
    CHECK(gt.dists(0)[0] == 0.0f);
  }
  SUBCASE("3-4-5 triangle, squared distances") {
    const auto base = VectorDataset::from_floats(2, {0, 0, 3, 4});
    const auto q = VectorDataset::from_floats(2, {0, 0});
    const auto gt = brute_force_knn(base, q, 2, Metric::L2);
    CHECK(gt.ids(0)[0] == 0);
    CHECK(gt.ids(0)[1] == 1);
    CHECK(gt.dists(0)[0] == 0.0f);
    CHECK(gt.dists(0)[1] == 25.0f);
  }
  SUBCASE("ties go to the lower id") {
    const auto base = VectorDataset::from_floats(1, {2, 0, 2, 0});
    const auto q = VectorDataset::from_floats(1, {1});
    const auto gt = brute_force_knn(base, q, 4, Metric::L2);
    CHECK(std::vector<VectorId>(gt.ids(0).begin(), gt.ids(0).end()) ==
          std::vector<VectorId>{0, 1, 2, 3});
  }
  SUBCASE("inner product ranks by descending similarity") {
    const auto base = VectorDataset::from_floats(2, {1, 0, 3, 0, 2, 0});
    const auto q = VectorDataset::from_floats(2, {1, 0});
    const auto gt = brute_force_knn(base, q, 3, Metric::InnerProduct);
    CHECK(gt.ids(0)[0] == 1);
    CHECK(gt.ids(0)[1] == 2);
    CHECK(gt.ids(0)[2] == 0);
    CHECK(gt.dists(0)[0] == -3.0f);
  }
  SUBCASE("ids are offset by id_base") {
    auto base = VectorDataset::from_floats(1, {5, 1, 3});
    base.set_id_base(100);
    const auto gt = brute_force_knn(base, VectorDataset::from_floats(1, {1}), 1, Metric::L2);
    CHECK(gt.ids(0)[0] == 101);
  }
  SUBCASE("errors") {
    const auto base = testing::random_dataset(5, 3, 1);
    CHECK_THROWS_AS(brute_force_knn(base, testing::random_dataset(2, 3, 2), 6, Metric::L2),
                    ArgumentError);
    CHECK_THROWS_AS(brute_force_knn(base, testing::random_dataset(2, 4, 2), 1, Metric::L2),
                    ArgumentError);
  }
}

TEST_CASE("brute_force_knn matches a naive scan on 500 x 16") {
  const auto base_f = testing::random_floats(500 * 16, 21);
  const auto q_f = testing::random_floats(10 * 16, 22);
  for (Metric m : {Metric::L2, Metric::InnerProduct}) {
    const auto gt = brute_force_knn(VectorDataset::from_floats(16, base_f),
                                    VectorDataset::from_floats(16, q_f), 10, m, 3);
    for (std::size_t q = 0; q < 10; ++q) {
      const auto ref = testing::naive_knn(base_f, q_f.data() + q * 16, 16, 10, m);
      for (std::size_t r = 0; r < 10; ++r) {
        CHECK(gt.ids(q)[r] == ref[r].id);
        CHECK(gt.dists(q)[r] == ref[r].dist);
      }
    }
  }
}

TEST_CASE("ground truth persists as ivecs + fvecs") {
  const auto dir = testing::temp_dir("gt_io");
  const auto gt = brute_force_knn(testing::random_dataset(200, 4, 1),
                                  testing::random_dataset(7, 4, 2), 5, Metric::L2);
  save_ground_truth(gt, dir / "gt.ivecs", dir / "gt.fvecs");
  const auto back = load_ground_truth(dir / "gt.ivecs", dir / "gt.fvecs");
  CHECK(back.k == 5);
  CHECK(back.num_queries == 7);
  CHECK(back.neighbors == gt.neighbors);
  CHECK(back.distances == gt.distances);
  const auto ids = load_ivecs(dir / "gt.ivecs");
  CHECK(ids.rows == 7);
  CHECK(ids.cols == 5);
}

TEST_CASE("recall_at_k") {
  GroundTruth gt;
  gt.k = 100;
  gt.num_queries = 1;
  for (VectorId i = 0; i < 100; ++i) gt.neighbors.push_back(i);
  gt.distances.assign(100, 0.0f);

  std::vector<std::vector<VectorId>> same = {gt.neighbors};
  CHECK(recall_at_k(same, gt, 100) == 1.0);

  std::vector<std::vector<VectorId>> disjoint(1);
  for (VectorId i = 0; i < 100; ++i) disjoint[0].push_back(1000 + i);
  CHECK(recall_at_k(disjoint, gt, 100) == 0.0);

  // 73 hits, 27 misses
  std::vector<std::vector<VectorId>> partial(1);
  for (VectorId i = 0; i < 73; ++i) partial[0].push_back(99 - i);
  for (VectorId i = 0; i < 27; ++i) partial[0].push_back(5000 + i);
  CHECK(recall_at_k(partial, gt, 100) == doctest::Approx(0.73).epsilon(1e-12));

  // a short list counts its gap as misses
  std::vector<std::vector<VectorId>> shorter = {{0, 1, 2, 3, 4}};
  CHECK(recall_at_k(shorter, gt, 100) == doctest::Approx(0.05).epsilon(1e-12));

  std::vector<std::vector<VectorId>> two(2, gt.neighbors);
  CHECK_THROWS_AS(recall_at_k(two, gt, 100), ArgumentError);
  CHECK_THROWS_AS(recall_at_k(same, gt, 101), ArgumentError);
}
