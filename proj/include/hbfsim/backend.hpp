#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "hbfsim/ivfpq.hpp"
#include "hbfsim/nand_model.hpp"
#include "hbfsim/nss_unit.hpp"

namespace hbfsim {

enum class BackendKind { Dram, Ssd, Hbf };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend(std::string_view name);

// What a rerank reads: the stored base vectors.
struct VectorShape {
  std::size_t dim = 0;
  std::size_t element_bytes = 4;
  std::uint64_t count = 0;
  VectorId id_base = 0;

  std::uint32_t vector_bytes() const { return static_cast<std::uint32_t>(dim * element_bytes); }
  static VectorShape of(const VectorDataset& ds) {
    return {ds.dim(), ds.element_bytes(), ds.count(), ds.id_base()};
  }
};

// On-package path: stacks of one geometry, each with its own search unit.
struct HbfPath {
  NandPhysicalParams phys;
  HbfStackModel stack;
  NssConfig nss;
  std::uint32_t stacks = 3;
  std::uint32_t channels = 8;
};

// DRAM and SSD use the link/device fields: candidates are fetched as
// granularity-rounded random reads with `parallelism` requests in flight.
// HBF uses `hbf` plus the per-request overhead.
struct BackendModel {
  BackendKind kind = BackendKind::Dram;
  double link_bw_gbps = 25.0;
  double link_latency_us = 5.0;
  double device_bw_gbps = 204.8;
  double device_latency_us = 0.1;
  std::uint32_t random_read_granularity_bytes = 64;
  double per_request_overhead_us = 20.0;
  std::uint32_t parallelism = 4;
  HbfPath hbf;

  void validate() const;
};

BackendModel dram_backend();
BackendModel ssd_backend();
BackendModel hbf_backend(const NandPhysicalParams& phys, const NandCalibration& cal,
                         const NandSubarrayConfig& cfg = kBaselineSubarray);

struct RerankCost {
  double latency_ms = 0.0;
  double achievable_qps = 0.0;
  std::uint64_t bytes_moved = 0;
  double energy_pj = 0.0;  // hbf only
  double cycles = 0.0;     // hbf only
};

// Cost of reranking one batch whose candidates are recorded in `trace`.
RerankCost rerank_cost(const BackendModel& backend, const CandidateTrace& trace,
                       const VectorShape& shape, std::size_t batch);

struct StageTimes {
  double probe_ms = 0.0;
  double scan_ms = 0.0;
  double rerank_ms = 0.0;
};

struct PipelineCost {
  double latency_ms = 0.0;
  double qps = 0.0;
};

// Latency is the stage sum. Synchronous throughput is batch / latency; with
// overlap the slowest stage sets steady-state throughput.
PipelineCost pipeline_cost(const StageTimes& stages, std::size_t batch, bool overlap = false);

}  // namespace hbfsim
