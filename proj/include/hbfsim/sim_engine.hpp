#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbfsim/backend.hpp"
#include "hbfsim/calibration.hpp"
#include "hbfsim/dataset.hpp"
#include "hbfsim/ivfpq.hpp"

namespace hbfsim {

struct GpuStageTimes {
  double probe_ms = 0.0;
  double scan_ms = 0.0;
};

// Roofline: each stage costs the larger of its compute and memory time.
// Probe reads all centroids for the batch; scan does m lookups per code and
// streams code + id bytes.
GpuStageTimes estimate_gpu_stage_times(std::size_t nlist, std::size_t dim, std::size_t m,
                                       std::size_t batch, std::uint64_t scanned_codes,
                                       const GpuCalibration& gpu);
GpuStageTimes estimate_gpu_stage_times(const IvfPqIndex& index, const CandidateTrace& batch,
                                       const GpuCalibration& gpu);

// A query trace cut into consecutive batches (cyclically, so every batch is
// full) and run through the GPU stages plus one rerank backend. Timing and
// traffic are means per batch; qps is total queries over total time.
struct WorkloadCost {
  double latency_ms = 0.0;
  double qps = 0.0;
  double probe_ms = 0.0;
  double scan_ms = 0.0;
  double rerank_ms = 0.0;
  double bytes_moved = 0.0;
  double energy_pj = 0.0;
};

// backend == nullptr models search without rerank.
WorkloadCost workload_cost(const IvfPqIndex& index, const CandidateTrace& trace,
                           const VectorShape& shape, std::size_t batch,
                           const BackendModel* backend, const GpuCalibration& gpu,
                           bool overlap = false);

struct ExperimentSpec {
  BuildParams index;  // seed is taken from `seed`
  std::vector<std::size_t> nprobe = {1, 4, 16, 64};
  std::vector<std::size_t> nrerank = {1000};
  std::size_t k = 100;
  bool rerank = true;
  bool include_no_rerank = false;  // adds "none" rows with the ADC-only ranking
  std::vector<std::size_t> batch_sizes = {1, 16, 64, 256};
  std::vector<BackendKind> backends = {BackendKind::Dram, BackendKind::Ssd, BackendKind::Hbf};
  std::vector<double> recall_targets;
  bool overlap = false;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct ExperimentData {
  VectorDataset base;
  VectorDataset queries;
  std::optional<GroundTruth> truth;
};

// Gaussian-mixture base and queries drawn from one seed, with exact ground
// truth at depth k.
ExperimentData synthetic_experiment_data(std::size_t n, std::size_t dim, std::size_t nq,
                                         std::size_t k, std::uint64_t seed,
                                         std::size_t clusters = 64, Metric metric = Metric::L2,
                                         std::size_t threads = 1);

// One (grid point, batch size, backend); timing columns as in WorkloadCost.
struct SimRow {
  std::string backend;
  std::size_t batch = 0;
  std::size_t nprobe = 0;
  std::size_t nrerank = 0;
  std::size_t k = 0;
  bool rerank = true;
  double recall = 0.0;
  double latency_ms = 0.0;
  double qps = 0.0;
  double probe_ms = 0.0;
  double scan_ms = 0.0;
  double rerank_ms = 0.0;
  double bytes_moved = 0.0;
  double energy_pj = 0.0;
};

struct SimReport {
  std::vector<SimRow> rows;
  nlohmann::json metadata;
};

inline constexpr int kReportSchemaVersion = 1;

SimReport run_experiment(const ExperimentSpec& spec, const ExperimentData& data,
                         const Calibration& cal, const IvfPqIndex* prebuilt = nullptr);

void write_report_csv(std::ostream& out, std::span<const SimRow> rows);
std::vector<SimRow> read_report_csv(std::istream& in);
void write_report_json(std::ostream& out, const SimReport& report);

// Rows not dominated in (recall, qps), ordered by recall (stable).
std::vector<SimRow> frontier(std::span<const SimRow> rows);

// Max-qps row of (backend, batch) with recall >= target; ties to smaller
// nprobe, then smaller nrerank.
std::optional<SimRow> select_at_recall(std::span<const SimRow> rows, double target,
                                       const std::string& backend, std::size_t batch);

}  // namespace hbfsim
