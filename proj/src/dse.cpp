#include "hbfsim/dse.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "hbfsim/errors.hpp"
#include "hbfsim/sim_engine.hpp"
#include "hbfsim/units.hpp"

namespace hbfsim {

SweepSpec SweepSpec::full_grid() {
  return {{64, 128, 192, 256}, {1024, 2048, 4096}, {64, 128, 256, 512, 1024}, 8};
}

void SweepSpec::validate() const {
  if (wl_layers.empty() || page_bytes.empty() || blocks.empty()) {
    throw ArgumentError("sweep sets must be non-empty");
  }
  if (dies == 0) throw ArgumentError("sweep needs at least one die");
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const Calibration& cal,
                            const SweepWorkload* workload) {
  spec.validate();
  if (workload != nullptr && workload->index == nullptr) {
    throw ArgumentError("sweep workload has no index");
  }
  std::vector<SweepRow> rows;
  for (auto layers : spec.wl_layers) {
    for (auto page : spec.page_bytes) {
      for (auto blocks : spec.blocks) {
        const NandSubarrayConfig cfg{layers, page, blocks};
        const auto stack = stack_model(cal.phys, cfg, spec.dies, cal.nand);
        SweepRow row;
        row.config = cfg;
        row.dies = spec.dies;
        row.subarrays_per_die = stack.subarrays_per_die;
        row.capacity_bytes = stack.stack_capacity_bytes;
        row.energy_pj_per_bit = stack.read_energy_pj_per_bit;
        row.latency_us = stack.subarray.read_latency_us;
        row.access_latency_us = stack.access_latency_us;
        row.bandwidth_gbps = stack.sustained_read_bw_gbps;
        if (workload != nullptr) {
          auto backend = cal.hbf_backend_for(cfg);
          backend.hbf.stack = stack;
          row.qps = workload_cost(*workload->index, workload->trace, workload->shape,
                                  workload->batch, &backend, cal.gpu)
                        .qps;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

double baseline_score(const SweepRow& row, double max_capacity, double max_bandwidth,
                      const DseWeights& weights) {
  return std::pow(static_cast<double>(row.capacity_bytes) / max_capacity, weights.capacity_weight) *
         std::pow(row.bandwidth_gbps / max_bandwidth, weights.bandwidth_weight);
}

SweepRow select_baseline(std::span<const SweepRow> rows, const DseWeights& weights) {
  if (rows.empty()) throw ArgumentError("select_baseline needs at least one row");
  double max_capacity = 0.0;
  double max_bandwidth = 0.0;
  for (const auto& r : rows) {
    max_capacity = std::max(max_capacity, static_cast<double>(r.capacity_bytes));
    max_bandwidth = std::max(max_bandwidth, r.bandwidth_gbps);
  }
  auto key = [](const SweepRow& r) {
    return std::tuple(r.config.wl_layers, r.config.page_bytes, r.config.blocks_per_subarray);
  };
  const SweepRow* best = nullptr;
  double best_score = -1.0;
  for (const auto& r : rows) {
    if (units::bytes_to_gb(static_cast<double>(r.capacity_bytes)) < weights.min_capacity_gb) continue;
    if (weights.max_latency_us && r.latency_us > *weights.max_latency_us) continue;
    const double s = baseline_score(r, max_capacity, max_bandwidth, weights);
    if (best == nullptr || s > best_score || (s == best_score && key(r) < key(*best))) {
      best = &r;
      best_score = s;
    }
  }
  if (best == nullptr) {
    throw ConfigError("no configuration meets the capacity floor and latency ceiling");
  }
  return *best;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  const bool with_qps = !rows.empty() && rows.front().qps.has_value();
  out << "wl_layers,page_bytes,blocks,capacity_gb,energy_pj_per_bit,latency_us,bandwidth_gbps,"
         "subarrays_per_die,access_latency_us"
      << (with_qps ? ",qps" : "") << '\n';
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}", r.config.wl_layers, r.config.page_bytes,
               r.config.blocks_per_subarray,
               units::bytes_to_gb(static_cast<double>(r.capacity_bytes)), r.energy_pj_per_bit,
               r.latency_us, r.bandwidth_gbps, r.subarrays_per_die, r.access_latency_us);
    if (with_qps) fmt::print(out, ",{}", r.qps.value_or(0.0));
    out << '\n';
  }
}

void write_sweep_long_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "wl_layers,page_bytes,blocks,metric,value\n";
  for (const auto& r : rows) {
    auto line = [&](const char* metric, double value) {
      fmt::print(out, "{},{},{},{},{}\n", r.config.wl_layers, r.config.page_bytes,
                 r.config.blocks_per_subarray, metric, value);
    };
    line("capacity_gb", units::bytes_to_gb(static_cast<double>(r.capacity_bytes)));
    line("energy_pj_per_bit", r.energy_pj_per_bit);
    line("latency_us", r.latency_us);
    line("bandwidth_gbps", r.bandwidth_gbps);
    if (r.qps) line("qps", *r.qps);
  }
}

}  // namespace hbfsim
