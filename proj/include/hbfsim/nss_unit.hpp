#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "hbfsim/dataset.hpp"
#include "hbfsim/nand_model.hpp"
#include "hbfsim/types.hpp"

namespace hbfsim {

struct NssConfig {
  std::uint32_t queue_count = 32;
  std::uint32_t queue_bytes = 8192;
  std::uint32_t queue_capacity_entries = 1024;  // 32-bit id + 32-bit distance each
  std::uint32_t mac_count = 32;
  std::uint32_t sorter_points = 256;
  double clock_ghz = 1.0;
  double area_mm2 = 4.11;
  double power_mw = 620.3;

  void validate() const;
};

// Where base vectors live. Each vector occupies a fixed slot: several per
// page when it fits, otherwise ceil(bytes / page) whole pages. Pages are
// striped round-robin over stacks, then channels, dies and subarrays.
struct VectorLayout {
  std::uint64_t count = 0;
  VectorId id_base = 0;
  std::uint32_t vector_bytes = 0;
  std::uint32_t page_bytes = 4096;
  std::uint32_t stacks = 1;
  std::uint32_t channels = 1;
  std::uint32_t dies_per_channel = 1;
  std::uint64_t subarrays_per_die = 1;
  std::uint32_t blocks_per_subarray = 1;
  std::uint64_t pages_per_block = 1;

  std::uint64_t vectors_per_page() const;  // 0 when a vector spans pages
  std::uint64_t pages_per_vector() const;
  std::uint64_t total_pages() const;
  std::uint64_t page_capacity() const;  // pages addressable by the geometry
  void validate() const;
};

// Layout of `count` vectors over `stacks` stacks built from one stack model.
VectorLayout make_layout(const HbfStackModel& stack, const NandPhysicalParams& phys,
                         std::uint32_t stacks, std::uint32_t channels, std::uint64_t count,
                         std::uint32_t vector_bytes, VectorId id_base = 0);

struct PhysicalAddress {
  std::uint32_t stack = 0;
  std::uint32_t channel = 0;
  std::uint32_t die = 0;
  std::uint64_t subarray = 0;
  std::uint32_t block = 0;
  std::uint64_t page = 0;
  std::uint32_t byte_offset = 0;

  friend bool operator==(const PhysicalAddress&, const PhysicalAddress&) = default;
};

PhysicalAddress page_address(std::uint64_t linear_page, const VectorLayout& layout);
std::uint64_t linear_page(const PhysicalAddress& addr, const VectorLayout& layout);

// Ordered addresses of every page the vector touches; byte_offset is the
// offset of the vector within the first page (0 on later pages).
std::vector<PhysicalAddress> address_of(VectorId id, const VectorLayout& layout);
std::uint64_t first_page_of(VectorId id, const VectorLayout& layout);

float exact_distance(std::span<const float> query, std::span<const float> candidate,
                     Metric metric);

// Sorter network stages for one pass over `points` inputs, and for reducing
// n inputs in tournament passes.
std::uint32_t bitonic_sort_stages(std::uint32_t points);
std::uint64_t topk_sorter_stages(std::size_t n, std::uint32_t points);

// k best candidates ascending (ties to lower id) via a bitonic network of
// `points` inputs. Inputs beyond one network are folded in tournament passes:
// each new sorted chunk meets the reversed survivors elementwise, and a
// bitonic merge restores order, keeping the best `points`.
std::vector<Candidate> bitonic_topk(std::span<const Candidate> candidates, std::size_t k,
                                    std::uint32_t points = 256);

struct RerankRequest {
  std::uint32_t query_id = 0;
  std::vector<VectorId> candidate_ids;
  std::vector<float> query_vector;
};

// Cycle breakdown for one batch on the slowest stack.
struct NssTiming {
  double cycles = 0.0;
  double fill_cycles = 0.0;
  double ingest_cycles = 0.0;
  double address_cycles = 0.0;
  double read_cycles = 0.0;
  double compute_cycles = 0.0;  // MAC + sorter
  std::uint64_t pages_read = 0;
  std::uint64_t bytes_read = 0;
  double energy_pj = 0.0;
  std::uint32_t bottleneck_stack = 0;
};

// Timing only: `per_query` holds each query's candidate ids.
NssTiming simulate_rerank_timing(std::span<const std::span<const VectorId>> per_query,
                                 std::size_t dim, const NssConfig& nss,
                                 const HbfStackModel& hbf, const VectorLayout& layout);

struct NssQueryTrace {
  std::uint32_t query_id = 0;
  std::size_t candidates = 0;
  std::uint64_t pages_read = 0;
  double cycles = 0.0;  // as if the query ran alone
  double energy_pj = 0.0;
};

struct NssResult {
  std::vector<std::vector<Candidate>> results;
  NssTiming timing;
  std::vector<NssQueryTrace> trace;
};

NssResult simulate_rerank(std::span<const RerankRequest> requests, const VectorDataset& base,
                          Metric metric, std::size_t k, const NssConfig& nss,
                          const HbfStackModel& hbf, const VectorLayout& layout);

void write_nss_trace_csv(std::ostream& out, std::span<const NssQueryTrace> trace);

}  // namespace hbfsim
