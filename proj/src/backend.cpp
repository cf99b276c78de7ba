#include "hbfsim/backend.hpp"

#include <algorithm>
#include <limits>

#include <fmt/core.h>

#include "hbfsim/errors.hpp"
#include "hbfsim/units.hpp"

namespace hbfsim {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Dram: return "dram";
    case BackendKind::Ssd: return "ssd";
    case BackendKind::Hbf: return "hbf";
  }
  return "?";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "dram") return BackendKind::Dram;
  if (name == "ssd") return BackendKind::Ssd;
  if (name == "hbf") return BackendKind::Hbf;
  throw ArgumentError(fmt::format("unknown backend '{}' (expected dram, ssd or hbf)", name));
}

void BackendModel::validate() const {
  if (per_request_overhead_us < 0) throw ConfigError("per-request overhead must be >= 0");
  if (kind == BackendKind::Hbf) {
    hbf.nss.validate();
    if (hbf.stacks == 0 || hbf.channels == 0) throw ConfigError("hbf needs stacks and channels");
    return;
  }
  if (!(link_bw_gbps > 0) || link_latency_us < 0 || !(device_bw_gbps > 0) ||
      device_latency_us < 0 || random_read_granularity_bytes == 0 || parallelism == 0) {
    throw ConfigError(fmt::format("{} backend parameters out of range", to_string(kind)));
  }
}

BackendModel dram_backend() { return {}; }

BackendModel ssd_backend() {
  BackendModel b;
  b.kind = BackendKind::Ssd;
  b.link_bw_gbps = 25.0;
  b.link_latency_us = 5.0;
  b.device_bw_gbps = 7.0;
  b.device_latency_us = 80.0;
  b.random_read_granularity_bytes = 4096;
  b.per_request_overhead_us = 20.0;
  b.parallelism = 64;
  return b;
}

BackendModel hbf_backend(const NandPhysicalParams& phys, const NandCalibration& cal,
                         const NandSubarrayConfig& cfg) {
  BackendModel b;
  b.kind = BackendKind::Hbf;
  b.per_request_overhead_us = 1.0;
  b.hbf.phys = phys;
  b.hbf.stack = stack_model(phys, cfg, cal.dies, cal);
  return b;
}

RerankCost rerank_cost(const BackendModel& backend, const CandidateTrace& trace,
                       const VectorShape& shape, std::size_t batch) {
  if (batch > 0 && trace.queries.empty()) {
    throw ArgumentError("empty candidate trace for a non-empty batch");
  }
  if (trace.queries.size() != batch) {
    throw ArgumentError(fmt::format("trace covers {} queries, batch is {}", trace.queries.size(),
                                    batch));
  }
  backend.validate();
  const std::uint64_t candidates = trace.total_candidates();
  const std::uint64_t vector_bytes = shape.vector_bytes();
  RerankCost cost;
  double latency_us = backend.per_request_overhead_us;

  if (backend.kind == BackendKind::Hbf) {
    const auto& path = backend.hbf;
    const auto layout = make_layout(path.stack, path.phys, path.stacks, path.channels, shape.count,
                                    shape.vector_bytes(), shape.id_base);
    std::vector<std::span<const VectorId>> per_query;
    per_query.reserve(trace.queries.size());
    for (const auto& q : trace.queries) per_query.emplace_back(q.candidates);
    const auto timing = simulate_rerank_timing(per_query, shape.dim, path.nss, path.stack, layout);
    cost.cycles = timing.cycles;
    cost.bytes_moved = timing.bytes_read;
    cost.energy_pj = timing.energy_pj;
    latency_us += timing.cycles / (path.nss.clock_ghz * 1e3);
  } else if (candidates > 0) {
    const std::uint64_t g = backend.random_read_granularity_bytes;
    const std::uint64_t per_candidate = (vector_bytes + g - 1) / g * g;
    cost.bytes_moved = candidates * per_candidate;
    const double bw = std::min(backend.link_bw_gbps, backend.device_bw_gbps);
    const double transfer_us =
        static_cast<double>(cost.bytes_moved) / units::gbps_to_bytes_per_us(bw);
    const double rounds = static_cast<double>((candidates + backend.parallelism - 1) /
                                              backend.parallelism);
    const double access_us = rounds * backend.device_latency_us;
    latency_us += backend.link_latency_us + std::max(transfer_us, access_us);
  }

  cost.latency_ms = units::us_to_ms(latency_us);
  cost.achievable_qps = batch == 0 ? 0.0 : static_cast<double>(batch) * 1e3 / cost.latency_ms;
  return cost;
}

PipelineCost pipeline_cost(const StageTimes& stages, std::size_t batch, bool overlap) {
  PipelineCost out;
  out.latency_ms = stages.probe_ms + stages.scan_ms + stages.rerank_ms;
  const double period_ms =
      overlap ? std::max({stages.probe_ms, stages.scan_ms, stages.rerank_ms}) : out.latency_ms;
  if (batch == 0) return out;
  out.qps = period_ms > 0 ? static_cast<double>(batch) * 1e3 / period_ms
                          : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace hbfsim
