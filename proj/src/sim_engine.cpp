#include "hbfsim/sim_engine.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "hbfsim/errors.hpp"

namespace hbfsim {

using nlohmann::json;

GpuStageTimes estimate_gpu_stage_times(std::size_t nlist, std::size_t dim, std::size_t m,
                                       std::size_t batch, std::uint64_t scanned_codes,
                                       const GpuCalibration& gpu) {
  GpuStageTimes t;
  const double flops = gpu.effective_tflops * 1e12;
  const double bytes_per_s = gpu.memory_bw_gbps * 1e9;
  if (batch > 0) {
    const double probe_ops = static_cast<double>(batch) * nlist * dim;
    const double probe_bytes = (static_cast<double>(nlist) * dim + static_cast<double>(batch) * dim) * 4.0;
    t.probe_ms = std::max(probe_ops / flops, probe_bytes / bytes_per_s) * 1e3;
  }
  const double codes = static_cast<double>(scanned_codes);
  t.scan_ms = std::max(codes * m / gpu.lookups_per_second, codes * (m + 4.0) / bytes_per_s) * 1e3;
  return t;
}

GpuStageTimes estimate_gpu_stage_times(const IvfPqIndex& index, const CandidateTrace& batch,
                                       const GpuCalibration& gpu) {
  return estimate_gpu_stage_times(index.nlist(), index.dim(), index.codebook.m(),
                                  batch.queries.size(), batch.total_scanned_codes(), gpu);
}

void ExperimentSpec::validate() const {
  if (nprobe.empty() || batch_sizes.empty()) throw ArgumentError("empty nprobe or batch grid");
  if (rerank && (nrerank.empty() || backends.empty())) {
    throw ArgumentError("rerank experiments need nrerank values and backends");
  }
  if (!rerank && !include_no_rerank) throw ArgumentError("experiment has nothing to run");
  if (k == 0) throw ArgumentError("k must be >= 1");
  for (auto n : nprobe)
    if (n == 0) throw ArgumentError("nprobe must be >= 1");
  for (auto b : batch_sizes)
    if (b == 0) throw ArgumentError("batch sizes must be >= 1");
  if (rerank) {
    const auto smallest = *std::min_element(nrerank.begin(), nrerank.end());
    if (smallest < k) {
      throw ArgumentError(fmt::format("k = {} exceeds the smallest nrerank {}", k, smallest));
    }
  }
  for (double t : recall_targets)
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("recall targets must lie in [0, 1]");
}

ExperimentData synthetic_experiment_data(std::size_t n, std::size_t dim, std::size_t nq,
                                         std::size_t k, std::uint64_t seed, std::size_t clusters,
                                         Metric metric, std::size_t threads) {
  // One draw split in two, so queries come from the base's mixture.
  const auto all = generate_synthetic(n + nq, dim, seed,
                                      SyntheticDistribution::gaussian_mixture(clusters));
  ExperimentData data;
  data.base = all.slice(0, n);
  data.base.set_id_base(0);
  data.queries = all.slice(n, n + nq);
  data.queries.set_id_base(0);
  if (nq > 0 && k > 0) data.truth = brute_force_knn(data.base, data.queries, k, metric, threads);
  return data;
}

WorkloadCost workload_cost(const IvfPqIndex& index, const CandidateTrace& trace,
                           const VectorShape& shape, std::size_t batch,
                           const BackendModel* backend, const GpuCalibration& gpu,
                           bool overlap) {
  if (batch == 0) throw ArgumentError("batch size must be >= 1");
  if (trace.queries.empty()) throw ArgumentError("workload trace is empty");
  const std::size_t windows = (trace.queries.size() + batch - 1) / batch;
  WorkloadCost sum;
  double period_ms = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    const auto window = trace.window(w * batch, batch);
    const auto g = estimate_gpu_stage_times(index, window, gpu);
    StageTimes st{g.probe_ms, g.scan_ms, 0.0};
    RerankCost rc;
    if (backend != nullptr) {
      rc = rerank_cost(*backend, window, shape, batch);
      st.rerank_ms = rc.latency_ms;
    }
    const auto pc = pipeline_cost(st, batch, overlap);
    sum.latency_ms += pc.latency_ms;
    period_ms += static_cast<double>(batch) * 1e3 / pc.qps;
    sum.probe_ms += st.probe_ms;
    sum.scan_ms += st.scan_ms;
    sum.rerank_ms += st.rerank_ms;
    sum.bytes_moved += static_cast<double>(rc.bytes_moved);
    sum.energy_pj += rc.energy_pj;
  }
  const double n = static_cast<double>(windows);
  WorkloadCost out;
  out.latency_ms = sum.latency_ms / n;
  out.qps = period_ms > 0 ? static_cast<double>(windows * batch) * 1e3 / period_ms : 0.0;
  out.probe_ms = sum.probe_ms / n;
  out.scan_ms = sum.scan_ms / n;
  out.rerank_ms = sum.rerank_ms / n;
  out.bytes_moved = sum.bytes_moved / n;
  out.energy_pj = sum.energy_pj / n;
  return out;
}

namespace {

json spec_to_json(const ExperimentSpec& spec) {
  json backends = json::array();
  for (auto b : spec.backends) backends.push_back(std::string(to_string(b)));
  return {
      {"nlist", spec.index.nlist},
      {"m", spec.index.m},
      {"residual", spec.index.residual},
      {"metric", std::string(to_string(spec.index.metric))},
      {"kmeans_iters", spec.index.kmeans_iters},
      {"nprobe", spec.nprobe},
      {"nrerank", spec.nrerank},
      {"k", spec.k},
      {"rerank", spec.rerank},
      {"include_no_rerank", spec.include_no_rerank},
      {"batch_sizes", spec.batch_sizes},
      {"backends", backends},
      {"recall_targets", spec.recall_targets},
      {"overlap", spec.overlap},
  };
}

}  // namespace

SimReport run_experiment(const ExperimentSpec& spec, const ExperimentData& data,
                         const Calibration& cal, const IvfPqIndex* prebuilt) {
  spec.validate();
  if (!data.truth) throw SetupError("experiment needs ground truth");
  if (data.queries.count() == 0) throw SetupError("experiment needs at least one query");
  if (data.truth->num_queries != data.queries.count()) {
    throw SetupError(fmt::format("ground truth covers {} queries, query set has {}",
                                 data.truth->num_queries, data.queries.count()));
  }
  if (data.truth->k < spec.k) {
    throw SetupError(fmt::format("ground truth depth {} is below k = {}", data.truth->k, spec.k));
  }

  IvfPqIndex built;
  if (prebuilt == nullptr) {
    BuildParams bp = spec.index;
    bp.seed = spec.seed;
    bp.threads = spec.threads;
    built = build_index(data.base, bp);
  }
  const IvfPqIndex& index = prebuilt != nullptr ? *prebuilt : built;
  const VectorShape shape = VectorShape::of(data.base);
  const std::size_t nq = data.queries.count();

  std::vector<BackendModel> models;
  for (auto kind : spec.backends) models.push_back(cal.backend(kind));

  SimReport report;
  auto run_point = [&](std::size_t nprobe, std::size_t nrerank, bool rerank) {
    const SearchParams sp{nprobe, nrerank, spec.k, rerank};
    const auto batch = search_batch(index, data.queries, sp, rerank ? &data.base : nullptr,
                                    spec.threads);
    const auto ids = batch.ids();
    const double recall = recall_at_k(ids, *data.truth, spec.k);

    for (std::size_t b : spec.batch_sizes) {
      const std::size_t variants = rerank ? models.size() : 1;
      for (std::size_t i = 0; i < variants; ++i) {
        const auto cost = workload_cost(index, batch.trace, shape, b,
                                        rerank ? &models[i] : nullptr, cal.gpu, spec.overlap);
        SimRow row;
        row.backend = rerank ? std::string(to_string(spec.backends[i])) : "none";
        row.batch = b;
        row.nprobe = nprobe;
        row.nrerank = rerank ? nrerank : spec.k;
        row.k = spec.k;
        row.rerank = rerank;
        row.recall = recall;
        row.latency_ms = cost.latency_ms;
        row.qps = cost.qps;
        row.probe_ms = cost.probe_ms;
        row.scan_ms = cost.scan_ms;
        row.rerank_ms = cost.rerank_ms;
        row.bytes_moved = cost.bytes_moved;
        row.energy_pj = cost.energy_pj;
        report.rows.push_back(row);
      }
    }
  };

  for (std::size_t nprobe : spec.nprobe) {
    if (nprobe > index.nlist()) {
      throw ArgumentError(fmt::format("nprobe = {} exceeds nlist = {}", nprobe, index.nlist()));
    }
    if (spec.include_no_rerank) run_point(nprobe, spec.k, false);
    if (spec.rerank) {
      for (std::size_t nr : spec.nrerank) run_point(nprobe, nr, true);
    }
  }

  json selections = json::array();
  for (double target : spec.recall_targets) {
    for (auto kind : spec.backends) {
      for (std::size_t b : spec.batch_sizes) {
        const auto pick = select_at_recall(report.rows, target, std::string(to_string(kind)), b);
        json entry = {{"target", target}, {"backend", std::string(to_string(kind))}, {"batch", b}};
        if (pick) {
          entry["nprobe"] = pick->nprobe;
          entry["nrerank"] = pick->nrerank;
          entry["recall"] = pick->recall;
          entry["qps"] = pick->qps;
        } else {
          entry["nprobe"] = nullptr;
        }
        selections.push_back(entry);
      }
    }
  }

  json sources = json::object();
  for (const auto& [file, hash] : cal.sources) sources[file] = hash;
  report.metadata = {
      {"schema_version", kReportSchemaVersion},
      {"seed", spec.seed},
      {"spec", spec_to_json(spec)},
      {"dataset",
       {{"base_count", data.base.count()},
        {"dim", data.base.dim()},
        {"element_bytes", data.base.element_bytes()},
        {"queries", nq},
        {"truth_k", data.truth->k}}},
      {"index", {{"nlist", index.nlist()}, {"m", index.codebook.m()}, {"size", index.size()}}},
      {"calibration_sources", sources},
      {"calibration", calibration_to_json(cal)},
      {"selections", selections},
  };
  return report;
}

namespace {

constexpr const char* kReportHeader =
    "backend,batch,nprobe,nrerank,k,rerank,recall,latency_ms,qps,probe_ms,scan_ms,rerank_ms,"
    "bytes_moved,energy_pj";

}  // namespace

void write_report_csv(std::ostream& out, std::span<const SimRow> rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.backend, r.batch, r.nprobe,
               r.nrerank, r.k, r.rerank ? 1 : 0, r.recall, r.latency_ms, r.qps, r.probe_ms,
               r.scan_ms, r.rerank_ms, r.bytes_moved, r.energy_pj);
  }
}

std::vector<SimRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw FormatError("report CSV has an unexpected header");
  }
  std::vector<SimRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 14) throw FormatError(fmt::format("report line {}: expected 14 fields", lineno));
    try {
      SimRow r;
      r.backend = f[0];
      r.batch = std::stoull(f[1]);
      r.nprobe = std::stoull(f[2]);
      r.nrerank = std::stoull(f[3]);
      r.k = std::stoull(f[4]);
      r.rerank = f[5] == "1";
      r.recall = std::stod(f[6]);
      r.latency_ms = std::stod(f[7]);
      r.qps = std::stod(f[8]);
      r.probe_ms = std::stod(f[9]);
      r.scan_ms = std::stod(f[10]);
      r.rerank_ms = std::stod(f[11]);
      r.bytes_moved = std::stod(f[12]);
      r.energy_pj = std::stod(f[13]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw FormatError(fmt::format("report line {}: malformed number", lineno));
    }
  }
  return rows;
}

void write_report_json(std::ostream& out, const SimReport& report) {
  out << report.metadata.dump(2) << '\n';
}

std::vector<SimRow> frontier(std::span<const SimRow> rows) {
  auto dominates = [](const SimRow& a, const SimRow& b) {
    return a.recall >= b.recall && a.qps >= b.qps && (a.recall > b.recall || a.qps > b.qps);
  };
  std::vector<SimRow> out;
  for (const auto& r : rows) {
    const bool dominated =
        std::any_of(rows.begin(), rows.end(), [&](const SimRow& o) { return dominates(o, r); });
    if (!dominated) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SimRow& a, const SimRow& b) { return a.recall < b.recall; });
  return out;
}

std::optional<SimRow> select_at_recall(std::span<const SimRow> rows, double target,
                                       const std::string& backend, std::size_t batch) {
  std::optional<SimRow> best;
  for (const auto& r : rows) {
    if (r.backend != backend || r.batch != batch || r.recall < target) continue;
    if (!best || r.qps > best->qps ||
        (r.qps == best->qps &&
         (r.nprobe < best->nprobe || (r.nprobe == best->nprobe && r.nrerank < best->nrerank)))) {
      best = r;
    }
  }
  return best;
}

}  // namespace hbfsim
