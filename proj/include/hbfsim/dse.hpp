#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "hbfsim/calibration.hpp"
#include "hbfsim/ivfpq.hpp"
#include "hbfsim/nand_model.hpp"

namespace hbfsim {

struct SweepSpec {
  std::vector<std::uint32_t> wl_layers;
  std::vector<std::uint32_t> page_bytes;
  std::vector<std::uint32_t> blocks;
  std::uint32_t dies = 8;

  // 4 layer counts x 3 page sizes x 5 block counts.
  static SweepSpec full_grid();
  void validate() const;
};

// Optional throughput coupling: the trace is replayed on the HBF path built
// from each swept geometry.
struct SweepWorkload {
  const IvfPqIndex* index = nullptr;
  CandidateTrace trace;
  VectorShape shape;
  std::size_t batch = 64;
};

struct SweepRow {
  NandSubarrayConfig config;
  std::uint32_t dies = 0;
  std::uint64_t subarrays_per_die = 0;
  std::uint64_t capacity_bytes = 0;  // whole stack
  double energy_pj_per_bit = 0.0;
  double latency_us = 0.0;  // subarray read
  double access_latency_us = 0.0;  // including stack overhead
  double bandwidth_gbps = 0.0;
  std::optional<double> qps;
};

// Cross product in (layers, page, blocks) order.
std::vector<SweepRow> sweep(const SweepSpec& spec, const Calibration& cal,
                            const SweepWorkload* workload = nullptr);

double baseline_score(const SweepRow& row, double max_capacity, double max_bandwidth,
                      const DseWeights& weights);

// Highest score among rows meeting the capacity floor and latency ceiling;
// normalization uses every row, so the pick does not depend on row order.
// Equal scores go to the smallest (layers, page, blocks).
SweepRow select_baseline(std::span<const SweepRow> rows, const DseWeights& weights);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
// One (config, metric, value) line per measurement, for plotting.
void write_sweep_long_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace hbfsim
