#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hbfsim/errors.hpp"
#include "hbfsim/ivfpq.hpp"
#include "hbfsim/nss_unit.hpp"
#include "hbfsim/rng.hpp"
#include "support.hpp"

using namespace hbfsim;

namespace {

const NandPhysicalParams kPhys{};

HbfStackModel baseline_stack() { return stack_model(kPhys, kBaselineSubarray, 8); }

std::vector<Candidate> sort_truncate(std::vector<Candidate> v, std::size_t k) {
  std::sort(v.begin(), v.end());
  v.resize(std::min(k, v.size()));
  return v;
}

std::vector<VectorId> iota_ids(VectorId n, VectorId stride = 1) {
  std::vector<VectorId> ids(n);
  for (VectorId i = 0; i < n; ++i) ids[i] = i * stride;
  return ids;
}

}  // namespace

TEST_CASE("NssConfig defaults are consistent") {
  NssConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.queue_capacity_entries * 8 == c.queue_bytes);
  c.queue_bytes = 4096;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("address_of arithmetic") {
  const auto stack = baseline_stack();
  const auto layout = make_layout(stack, kPhys, 3, 8, 100000, 128);
  CHECK(layout.vectors_per_page() == 32);

  const auto a0 = address_of(0, layout);
  REQUIRE(a0.size() == 1);
  CHECK(a0[0] == PhysicalAddress{});
  CHECK(linear_page(a0[0], layout) == 0);

  const auto a32 = address_of(32, layout);
  CHECK(linear_page(a32[0], layout) == 1);
  CHECK(a32[0].byte_offset == 0);
  CHECK(a32[0].stack == 1);

  const auto a33 = address_of(33, layout);
  CHECK(linear_page(a33[0], layout) == 1);
  CHECK(a33[0].byte_offset == 128);

  // stripes advance stack, then channel, then die (one per channel here),
  // then subarray
  CHECK(layout.dies_per_channel == 1);
  CHECK(page_address(3, layout).channel == 1);
  CHECK(page_address(3 * 8, layout).die == 0);
  CHECK(page_address(3 * 8, layout).subarray == 1);
  const auto wide = make_layout(stack, kPhys, 3, 2, 100000, 128);
  CHECK(page_address(3 * 2, wide).die == 1);
  CHECK(page_address(3 * 2 * 4, wide).subarray == 1);

  CHECK_THROWS_AS(address_of(100000, layout), AddressError);
}

TEST_CASE("address_of is injective over 1e5 ids") {
  const auto stack = baseline_stack();
  for (std::uint32_t vb : {128u, 384u, 512u, 4096u, 6000u}) {
    const auto layout = make_layout(stack, kPhys, 3, 8, 100000, vb);
    std::set<std::pair<std::uint64_t, std::uint32_t>> seen;
    for (VectorId id = 0; id < 100000; ++id) {
      const auto addrs = address_of(id, layout);
      REQUIRE(addrs.size() == layout.pages_per_vector());
      const auto first = linear_page(addrs[0], layout);
      for (std::size_t p = 0; p < addrs.size(); ++p) {
        REQUIRE(linear_page(addrs[p], layout) == first + p);
        REQUIRE(page_address(first + p, layout) == PhysicalAddress{addrs[p].stack, addrs[p].channel,
                                                                   addrs[p].die, addrs[p].subarray,
                                                                   addrs[p].block, addrs[p].page, 0});
      }
      REQUIRE(seen.insert({first, addrs[0].byte_offset}).second);
      REQUIRE(addrs[0].byte_offset + std::min(vb, layout.page_bytes) <= layout.page_bytes);
    }
  }
}

TEST_CASE("vectors larger than a page span consecutive pages") {
  const auto layout = make_layout(baseline_stack(), kPhys, 1, 8, 10, 6000);
  CHECK(layout.pages_per_vector() == 2);
  const auto a = address_of(3, layout);
  REQUIRE(a.size() == 2);
  CHECK(linear_page(a[0], layout) == 6);
  CHECK(linear_page(a[1], layout) == 7);
}

TEST_CASE("layout bounds") {
  auto layout = make_layout(baseline_stack(), kPhys, 1, 8, 10, 128, 500);
  CHECK_NOTHROW(address_of(500, layout));
  CHECK_THROWS_AS(address_of(499, layout), AddressError);
  CHECK_THROWS_AS(address_of(510, layout), AddressError);
  layout.count = layout.page_capacity() * 32 + 1;
  CHECK_THROWS_AS(layout.validate(), AddressError);
  CHECK_THROWS_AS(make_layout(baseline_stack(), kPhys, 1, 3, 10, 128), ConfigError);
}

TEST_CASE("exact_distance") {
  const std::vector<float> a = {0, 0}, b = {3, 4};
  CHECK(exact_distance(a, a, Metric::L2) == 0.0f);
  CHECK(exact_distance(a, b, Metric::L2) == 25.0f);
  CHECK(exact_distance(b, b, Metric::InnerProduct) == -25.0f);
  CHECK_THROWS_AS(exact_distance(a, std::vector<float>(3), Metric::L2), ArgumentError);
  const auto x = testing::random_floats(1000 * 24, 5);
  const auto y = testing::random_floats(1000 * 24, 6);
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::span<const float> u(x.data() + i * 24, 24), v(y.data() + i * 24, 24);
    REQUIRE(exact_distance(u, v, Metric::L2) ==
            testing::naive_distance(u.data(), v.data(), 24, Metric::L2));
    REQUIRE(exact_distance(u, v, Metric::InnerProduct) ==
            testing::naive_distance(u.data(), v.data(), 24, Metric::InnerProduct));
  }
}

TEST_CASE("sorter stage counts") {
  CHECK(bitonic_sort_stages(256) == 36);
  CHECK(bitonic_sort_stages(2) == 1);
  CHECK(topk_sorter_stages(0, 256) == 0);
  CHECK(topk_sorter_stages(1, 256) == 36);
  CHECK(topk_sorter_stages(256, 256) == 36);
  CHECK(topk_sorter_stages(257, 256) == 36 + 36 + 1 + 8);
  CHECK(topk_sorter_stages(1024, 256) == 36 + 3 * 45);
}

TEST_CASE("bitonic_topk examples") {
  std::vector<Candidate> sorted;
  for (VectorId i = 0; i < 256; ++i) sorted.push_back({i, static_cast<float>(i)});
  CHECK(bitonic_topk(sorted, 256) == sorted);

  std::vector<Candidate> reversed(sorted.rbegin(), sorted.rend());
  CHECK(bitonic_topk(reversed, 256) == sorted);

  std::vector<Candidate> ties = {{7, 1.0f}, {3, 1.0f}, {5, 0.5f}, {1, 1.0f}};
  const auto t = bitonic_topk(ties, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0].id == 5);
  CHECK(t[1].id == 1);
  CHECK(t[2].id == 3);

  CHECK(bitonic_topk(sorted, 0).empty());
  CHECK(bitonic_topk(std::vector<Candidate>{}, 10).empty());
  CHECK(bitonic_topk(ties, 100).size() == 4);
  CHECK_THROWS_AS(bitonic_topk(sorted, 257), ArgumentError);
  CHECK_THROWS_AS(bitonic_topk(sorted, 4, 100), ArgumentError);
}

TEST_CASE("bitonic_topk over 10,000 random candidates") {
  Rng rng(77);
  std::vector<Candidate> cands(10000);
  for (VectorId i = 0; i < 10000; ++i) {
    cands[i] = {static_cast<VectorId>(rng.below(1u << 30)), static_cast<float>(rng.uniform())};
  }
  CHECK(bitonic_topk(cands, 100) == sort_truncate(cands, 100));
}

TEST_CASE("simulate_rerank functional results match the index rerank") {
  const auto base = testing::random_dataset(5000, 32, 90);
  const auto queries = testing::random_dataset(4, 32, 91);
  const auto stack = baseline_stack();
  const auto layout = make_layout(stack, kPhys, 3, 8, base.count(), 128);
  Rng rng(1);
  std::vector<RerankRequest> reqs;
  for (std::uint32_t q = 0; q < 4; ++q) {
    std::vector<VectorId> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back(static_cast<VectorId>(rng.below(5000)));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    reqs.push_back({q, ids, queries.row(q)});
  }
  const auto res = simulate_rerank(reqs, base, Metric::L2, 100, NssConfig{}, stack, layout);
  REQUIRE(res.results.size() == 4);
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(res.results[q] == exact_rerank(reqs[q].candidate_ids, reqs[q].query_vector, base,
                                         Metric::L2, 100));
  }
  REQUIRE(res.trace.size() == 4);
  CHECK(res.trace[2].query_id == 2);
  CHECK(res.trace[2].candidates == reqs[2].candidate_ids.size());
}

TEST_CASE("simulate_rerank timing") {
  const auto base = testing::random_dataset(5000, 32, 90);
  const auto q = testing::random_dataset(1, 32, 91).row(0);
  const auto stack = baseline_stack();
  const NssConfig nss;

  SUBCASE("empty batch costs nothing") {
    const auto layout = make_layout(stack, kPhys, 3, 8, base.count(), 128);
    const auto r = simulate_rerank({}, base, Metric::L2, 10, nss, stack, layout);
    CHECK(r.timing.cycles == 0.0);
    CHECK(r.timing.bytes_read == 0);
    CHECK(r.timing.energy_pj == 0.0);
  }
  SUBCASE("1000 candidates of 128 bytes read 1000 pages") {
    const auto layout = make_layout(stack, kPhys, 3, 8, base.count(), 128);
    const std::vector<RerankRequest> reqs = {{0, iota_ids(1000, 5), q}};
    const auto r = simulate_rerank(reqs, base, Metric::L2, 100, nss, stack, layout);
    CHECK(r.timing.pages_read == 1000);
    CHECK(r.timing.bytes_read == 1000ull * 4096);
    CHECK(r.timing.energy_pj >= 1000.0 * 4096 * 8 * 30.0);
  }
  SUBCASE("single-stack cycle composition") {
    const auto layout = make_layout(stack, kPhys, 1, 8, base.count(), 128);
    const auto ids = iota_ids(2000, 2);
    const std::span<const VectorId> one[] = {ids};
    const auto t = simulate_rerank_timing(one, 32, nss, stack, layout);
    const double fill = 1.0 + stack.access_latency_us * 1e3 + 1.0;  // ceil(32 / 32) MAC cycles
    const double read = 2000.0 * 4096.0 / 125.0;                   // 125 bytes per cycle
    const double compute = 2000.0 * 1 + 2 * topk_sorter_stages(1000, 256);
    CHECK(t.fill_cycles == doctest::Approx(fill));
    CHECK(t.read_cycles == doctest::Approx(read));
    CHECK(t.compute_cycles == doctest::Approx(compute));
    CHECK(t.cycles == doctest::Approx(fill + 2000.0 + std::max({2000.0, read, compute})));
    const double power_pj = 620.3 * t.cycles;  // mW x ns
    CHECK(t.energy_pj == doctest::Approx(2000.0 * 4096 * 8 * 30.0 + power_pj));
  }
  SUBCASE("doubling candidates doubles the read component") {
    // 600 splits evenly over 3 stacks; 700 on a single stack
    for (const auto& [stacks, count] : {std::pair{3u, 600u}, std::pair{1u, 700u}}) {
      const auto layout = make_layout(stack, kPhys, stacks, 8, base.count(), 128);
      const auto ids = iota_ids(count, 7);
      auto twice = ids;
      twice.insert(twice.end(), ids.begin(), ids.end());
      const std::span<const VectorId> a[] = {ids};
      const std::span<const VectorId> b[] = {twice};
      const auto ta = simulate_rerank_timing(a, 32, nss, stack, layout);
      const auto tb = simulate_rerank_timing(b, 32, nss, stack, layout);
      CHECK(tb.read_cycles == 2.0 * ta.read_cycles);
      CHECK(tb.bytes_read == 2 * ta.bytes_read);
    }
  }
  SUBCASE("layout mismatch") {
    const auto layout = make_layout(stack, kPhys, 3, 8, 100, 128);
    const std::vector<RerankRequest> reqs = {{0, {1, 2}, q}};
    CHECK_THROWS_AS(simulate_rerank(reqs, base, Metric::L2, 1, nss, stack, layout), AddressError);
    const auto good = make_layout(stack, kPhys, 3, 8, base.count(), 128);
    const std::vector<RerankRequest> far = {{0, {1, 7000}, q}};
    CHECK_THROWS_AS(simulate_rerank(far, base, Metric::L2, 1, nss, stack, good), AddressError);
  }
}

TEST_CASE("nss trace csv") {
  std::ostringstream out;
  const std::vector<NssQueryTrace> t = {{3, 10, 10, 12.5, 100.0}};
  write_nss_trace_csv(out, t);
  CHECK(out.str() == "query_id,candidates,pages_read,cycles,energy_pj\n3,10,10,12.5,100\n");
}
