#include "hbfsim/nss_unit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "hbfsim/distance.hpp"
#include "hbfsim/errors.hpp"

namespace hbfsim {

void NssConfig::validate() const {
  if (queue_count == 0 || queue_capacity_entries == 0 || mac_count == 0) {
    throw ConfigError("near-storage unit counts must be positive");
  }
  if (std::uint64_t{queue_capacity_entries} * 8 != queue_bytes) {
    throw ConfigError(fmt::format("queue of {} entries x 8 B does not fill {} bytes",
                                  queue_capacity_entries, queue_bytes));
  }
  if (sorter_points < 2 || !std::has_single_bit(sorter_points)) {
    throw ConfigError(fmt::format("sorter width {} is not a power of two", sorter_points));
  }
  if (!(clock_ghz > 0) || area_mm2 < 0 || power_mw < 0) {
    throw ConfigError("near-storage unit clock/area/power out of range");
  }
}

std::uint64_t VectorLayout::vectors_per_page() const {
  return vector_bytes <= page_bytes ? page_bytes / vector_bytes : 0;
}

std::uint64_t VectorLayout::pages_per_vector() const {
  return vector_bytes <= page_bytes ? 1 : (vector_bytes + page_bytes - 1) / page_bytes;
}

std::uint64_t VectorLayout::total_pages() const {
  const auto vpp = vectors_per_page();
  return vpp > 0 ? (count + vpp - 1) / vpp : count * pages_per_vector();
}

std::uint64_t VectorLayout::page_capacity() const {
  return std::uint64_t{stacks} * channels * dies_per_channel * subarrays_per_die *
         blocks_per_subarray * pages_per_block;
}

void VectorLayout::validate() const {
  if (vector_bytes == 0 || page_bytes == 0 || stacks == 0 || channels == 0 ||
      dies_per_channel == 0 || subarrays_per_die == 0 || blocks_per_subarray == 0 ||
      pages_per_block == 0) {
    throw ConfigError("vector layout has a zero-sized field");
  }
  if (total_pages() > page_capacity()) {
    throw AddressError(fmt::format("{} vectors need {} pages but the layout holds {}", count,
                                   total_pages(), page_capacity()));
  }
}

VectorLayout make_layout(const HbfStackModel& stack, const NandPhysicalParams& phys,
                         std::uint32_t stacks, std::uint32_t channels, std::uint64_t count,
                         std::uint32_t vector_bytes, VectorId id_base) {
  if (channels == 0 || stack.dies % channels != 0) {
    throw ConfigError(fmt::format("{} dies cannot be split over {} channels", stack.dies, channels));
  }
  VectorLayout layout;
  layout.count = count;
  layout.id_base = id_base;
  layout.vector_bytes = vector_bytes;
  layout.page_bytes = stack.config.page_bytes;
  layout.stacks = stacks;
  layout.channels = channels;
  layout.dies_per_channel = stack.dies / channels;
  layout.subarrays_per_die = stack.subarrays_per_die;
  layout.blocks_per_subarray = stack.config.blocks_per_subarray;
  layout.pages_per_block = pages_per_block(phys, stack.config);
  layout.validate();
  return layout;
}

PhysicalAddress page_address(std::uint64_t linear, const VectorLayout& layout) {
  PhysicalAddress a;
  a.stack = static_cast<std::uint32_t>(linear % layout.stacks);
  std::uint64_t q = linear / layout.stacks;
  a.channel = static_cast<std::uint32_t>(q % layout.channels);
  q /= layout.channels;
  a.die = static_cast<std::uint32_t>(q % layout.dies_per_channel);
  q /= layout.dies_per_channel;
  a.subarray = q % layout.subarrays_per_die;
  q /= layout.subarrays_per_die;
  if (q / layout.pages_per_block >= layout.blocks_per_subarray) {
    throw AddressError(fmt::format("page {} beyond layout capacity", linear));
  }
  a.block = static_cast<std::uint32_t>(q / layout.pages_per_block);
  a.page = q % layout.pages_per_block;
  return a;
}

std::uint64_t linear_page(const PhysicalAddress& a, const VectorLayout& layout) {
  std::uint64_t q = std::uint64_t{a.block} * layout.pages_per_block + a.page;
  q = q * layout.subarrays_per_die + a.subarray;
  q = q * layout.dies_per_channel + a.die;
  q = q * layout.channels + a.channel;
  return q * layout.stacks + a.stack;
}

std::uint64_t first_page_of(VectorId id, const VectorLayout& layout) {
  if (id < layout.id_base || id - layout.id_base >= layout.count) {
    throw AddressError(fmt::format("vector id {} outside stored range [{}, {})", id,
                                   layout.id_base, layout.id_base + layout.count));
  }
  const std::uint64_t local = id - layout.id_base;
  const auto vpp = layout.vectors_per_page();
  return vpp > 0 ? local / vpp : local * layout.pages_per_vector();
}

std::vector<PhysicalAddress> address_of(VectorId id, const VectorLayout& layout) {
  const std::uint64_t first = first_page_of(id, layout);
  const auto vpp = layout.vectors_per_page();
  std::vector<PhysicalAddress> out;
  for (std::uint64_t p = 0; p < layout.pages_per_vector(); ++p) {
    out.push_back(page_address(first + p, layout));
  }
  if (vpp > 0) {
    out.front().byte_offset =
        static_cast<std::uint32_t>(((id - layout.id_base) % vpp) * layout.vector_bytes);
  }
  return out;
}

float exact_distance(std::span<const float> query, std::span<const float> candidate,
                     Metric metric) {
  if (query.size() != candidate.size()) {
    throw ArgumentError(fmt::format("exact_distance: dims {} and {} differ", query.size(),
                                    candidate.size()));
  }
  return metric_distance(metric, query, candidate);
}

std::uint32_t bitonic_sort_stages(std::uint32_t points) {
  const auto p = static_cast<std::uint32_t>(std::bit_width(points) - 1);
  return p * (p + 1) / 2;
}

std::uint64_t topk_sorter_stages(std::size_t n, std::uint32_t points) {
  if (n == 0) return 0;
  const std::uint64_t passes = (n + points - 1) / points;
  const std::uint64_t sort = bitonic_sort_stages(points);
  const std::uint64_t merge = static_cast<std::uint64_t>(std::bit_width(points) - 1);
  return sort + (passes - 1) * (sort + 1 + merge);
}

namespace {

// Sorter lane; padding lanes order after every real candidate.
struct Lane {
  Candidate c;
  bool pad = true;
};

bool lane_less(const Lane& a, const Lane& b) {
  if (a.pad != b.pad) return !a.pad;
  return !a.pad && a.c < b.c;
}

void compare_exchange(std::vector<Lane>& v, std::size_t i, std::size_t l, bool ascending) {
  const bool out_of_order = ascending ? lane_less(v[l], v[i]) : lane_less(v[i], v[l]);
  if (out_of_order) std::swap(v[i], v[l]);
}

void bitonic_sort(std::vector<Lane>& v) {
  const std::size_t n = v.size();
  for (std::size_t k = 2; k <= n; k <<= 1) {
    for (std::size_t j = k >> 1; j > 0; j >>= 1) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i ^ j;
        if (l > i) compare_exchange(v, i, l, (i & k) == 0);
      }
    }
  }
}

void bitonic_merge(std::vector<Lane>& v) {
  const std::size_t n = v.size();
  for (std::size_t j = n >> 1; j > 0; j >>= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t l = i ^ j;
      if (l > i) compare_exchange(v, i, l, true);
    }
  }
}

}  // namespace

std::vector<Candidate> bitonic_topk(std::span<const Candidate> candidates, std::size_t k,
                                    std::uint32_t points) {
  if (points < 2 || !std::has_single_bit(points)) {
    throw ArgumentError(fmt::format("sorter width {} is not a power of two", points));
  }
  if (k > points) {
    throw ArgumentError(fmt::format("k = {} exceeds the {}-point sorter", k, points));
  }
  if (k == 0 || candidates.empty()) return {};

  auto load = [&](std::size_t begin) {
    std::vector<Lane> chunk(points);
    const std::size_t end = std::min(candidates.size(), begin + points);
    for (std::size_t i = begin; i < end; ++i) chunk[i - begin] = {candidates[i], false};
    bitonic_sort(chunk);
    return chunk;
  };

  std::vector<Lane> survivors = load(0);
  for (std::size_t begin = points; begin < candidates.size(); begin += points) {
    const std::vector<Lane> chunk = load(begin);
    for (std::size_t i = 0; i < points; ++i) {
      const Lane& other = chunk[points - 1 - i];
      if (lane_less(other, survivors[i])) survivors[i] = other;
    }
    bitonic_merge(survivors);
  }

  std::vector<Candidate> out;
  for (std::size_t i = 0; i < k && !survivors[i].pad; ++i) out.push_back(survivors[i].c);
  return out;
}

NssTiming simulate_rerank_timing(std::span<const std::span<const VectorId>> per_query,
                                 std::size_t dim, const NssConfig& nss,
                                 const HbfStackModel& hbf, const VectorLayout& layout) {
  nss.validate();
  const std::size_t stacks = layout.stacks;
  const double mac_per_vector =
      static_cast<double>((dim + nss.mac_count - 1) / nss.mac_count);
  const double read_latency_cycles = hbf.access_latency_us * 1e3 * nss.clock_ghz;
  const double fill = 1.0 + read_latency_cycles + mac_per_vector;
  const double bytes_per_cycle = hbf.sustained_read_bw_gbps / nss.clock_ghz;
  const std::uint64_t pages_per_vector = layout.pages_per_vector();

  // Per stack: ids, queue segments, sorter stages. Each query's candidates
  // are split evenly (stack 0 takes the remainder first) instead of by the
  // page that holds them; that split shifts with the slot packing, which
  // would let a wider vector finish sooner.
  std::vector<std::uint64_t> ids(stacks, 0);
  std::vector<std::uint64_t> segments(stacks, 0);
  std::vector<std::uint64_t> sort_stages(stacks, 0);
  for (const auto& query : per_query) {
    for (VectorId id : query) first_page_of(id, layout);  // range check
    for (std::size_t s = 0; s < stacks; ++s) {
      std::uint64_t left = query.size() / stacks + (s < query.size() % stacks ? 1 : 0);
      ids[s] += left;
      while (left > 0) {
        const std::uint64_t seg = std::min<std::uint64_t>(left, nss.queue_capacity_entries);
        ++segments[s];
        sort_stages[s] += topk_sorter_stages(seg, nss.sorter_points);
        left -= seg;
      }
    }
  }

  NssTiming out;
  for (std::size_t s = 0; s < stacks; ++s) {
    const std::uint64_t pages = ids[s] * pages_per_vector;
    const std::uint64_t bytes = pages * layout.page_bytes;
    out.pages_read += pages;
    out.bytes_read += bytes;
    if (ids[s] == 0) continue;
    const double waves = static_cast<double>((segments[s] + nss.queue_count - 1) / nss.queue_count);
    const double ingest = static_cast<double>(ids[s]);
    const double address = static_cast<double>(ids[s]);
    const double read = static_cast<double>(bytes) / bytes_per_cycle;
    const double compute = static_cast<double>(ids[s]) * mac_per_vector +
                           static_cast<double>(sort_stages[s]);
    const double cycles = waves * fill + ingest + std::max({address, read, compute});
    out.energy_pj += nss.power_mw * (cycles / nss.clock_ghz);
    if (cycles > out.cycles) {
      out.cycles = cycles;
      out.fill_cycles = waves * fill;
      out.ingest_cycles = ingest;
      out.address_cycles = address;
      out.read_cycles = read;
      out.compute_cycles = compute;
      out.bottleneck_stack = static_cast<std::uint32_t>(s);
    }
  }
  out.energy_pj += static_cast<double>(out.bytes_read) * 8.0 * hbf.read_energy_pj_per_bit;
  return out;
}

NssResult simulate_rerank(std::span<const RerankRequest> requests, const VectorDataset& base,
                          Metric metric, std::size_t k, const NssConfig& nss,
                          const HbfStackModel& hbf, const VectorLayout& layout) {
  if (layout.count != base.count() || layout.id_base != base.id_base()) {
    throw AddressError("vector layout does not describe the base dataset");
  }
  if (k > nss.sorter_points) {
    throw ArgumentError(fmt::format("k = {} exceeds the {}-point sorter", k, nss.sorter_points));
  }
  NssResult out;
  std::vector<std::span<const VectorId>> spans;
  std::vector<float> row(base.dim());
  for (const auto& req : requests) {
    if (req.query_vector.size() != base.dim()) {
      throw ArgumentError(fmt::format("query {} has dim {}, base has {}", req.query_id,
                                      req.query_vector.size(), base.dim()));
    }
    std::vector<Candidate> exact;
    exact.reserve(req.candidate_ids.size());
    for (VectorId id : req.candidate_ids) {
      first_page_of(id, layout);  // range check
      base.row(id - base.id_base(), row);
      exact.push_back({id, exact_distance(req.query_vector, row, metric)});
    }
    out.results.push_back(bitonic_topk(exact, k, nss.sorter_points));
    spans.emplace_back(req.candidate_ids);

    const std::span<const VectorId> one[] = {req.candidate_ids};
    const auto alone = simulate_rerank_timing(one, base.dim(), nss, hbf, layout);
    out.trace.push_back({req.query_id, req.candidate_ids.size(), alone.pages_read, alone.cycles,
                         alone.energy_pj});
  }
  out.timing = simulate_rerank_timing(spans, base.dim(), nss, hbf, layout);
  return out;
}

void write_nss_trace_csv(std::ostream& out, std::span<const NssQueryTrace> trace) {
  out << "query_id,candidates,pages_read,cycles,energy_pj\n";
  for (const auto& t : trace) {
    fmt::print(out, "{},{},{},{},{}\n", t.query_id, t.candidates, t.pages_read, t.cycles,
               t.energy_pj);
  }
}

}  // namespace hbfsim
