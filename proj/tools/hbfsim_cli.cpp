// hbfsim command-line driver: dataset prep, index build, search, experiments,
// geometry sweeps and frontier extraction. Every output is a file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "hbfsim/calibration.hpp"
#include "hbfsim/dataset.hpp"
#include "hbfsim/dse.hpp"
#include "hbfsim/errors.hpp"
#include "hbfsim/ivfpq.hpp"
#include "hbfsim/nss_unit.hpp"
#include "hbfsim/sim_engine.hpp"

namespace fs = std::filesystem;
using namespace hbfsim;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kModel = 3 };

// JSON object -> CLI11 config items for the selected subcommand. Keys are
// option names without dashes; arrays become repeated values. Options given on
// the command line win.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConfigError("writing JSON configs is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    const auto subs = root_->get_subcommands();
    if (subs.empty()) throw CLI::ConfigError("--config needs a subcommand");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = {subs.front()->get_name()};
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(key, v));
      } else {
        item.inputs.push_back(scalar(key, value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError(fmt::format("config key '{}' has an unsupported value", key));
  }
};

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<std::string> calibration_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random draw");
  sub->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--calibration-dir", c.calibration_dir,
                  std::string("Calibration directory (default: $") + kCalibrationEnvVar +
                      " or the shipped one)");
  sub->fallthrough();  // --config lives on the root app
  sub->footer("Option values may also come from --config FILE.json (keys without dashes).");
}

Calibration calibration_for(const Common& c) {
  std::optional<fs::path> flag;
  if (c.calibration_dir) flag = fs::path(*c.calibration_dir);
  const fs::path dir = resolve_calibration_dir(flag);
  if (!flag && !fs::is_directory(dir)) return default_calibration();
  return load_calibration(dir);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

VectorDataset load_any(const fs::path& path) { return load_vectors(path, format_from_path(path)); }

std::string ext_of(VecsFormat f) { return f == VecsFormat::Bvecs ? ".bvecs" : ".fvecs"; }

VectorDataset quantize_to_bytes(const VectorDataset& ds) {
  const auto f = ds.to_float();
  std::vector<std::uint8_t> bytes(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const float scaled = std::nearbyint(f[i] * 255.0f);
    bytes[i] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
  }
  return VectorDataset::from_bytes(ds.dim(), std::move(bytes), ds.id_base());
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 10000;
  std::size_t d = 128;
  std::size_t nq = 100;
  std::size_t k = 0;
  std::string dist = "mixture";
  std::size_t clusters = 64;
  double spread = 0.1;
  std::string format = "fvecs";
  std::string metric = "l2";
  std::string out_dir;
};

void cmd_gen(const GenArgs& a, const Common& c) {
  if (a.d == 0) throw ArgumentError("--d must be >= 1");
  const auto format = parse_vecs_format(a.format);
  if (format == VecsFormat::Ivecs) throw ArgumentError("datasets are written as fvecs or bvecs");
  SyntheticDistribution dist;
  if (a.dist == "uniform") {
    dist = SyntheticDistribution::uniform();
  } else if (a.dist == "mixture") {
    dist = SyntheticDistribution::gaussian_mixture(a.clusters, a.spread);
  } else {
    throw ArgumentError(fmt::format("unknown distribution '{}'", a.dist));
  }
  // One draw split into base and queries so both follow the same mixture.
  const auto all = generate_synthetic(a.n + a.nq, a.d, c.seed, dist);
  VectorDataset base = all.slice(0, a.n);
  VectorDataset queries = all.slice(a.n, a.n + a.nq);
  base.set_id_base(0);
  queries.set_id_base(0);
  if (format == VecsFormat::Bvecs) {
    base = quantize_to_bytes(base);
    queries = quantize_to_bytes(queries);
  }
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  save_vectors(base, dir / ("base" + ext_of(format)), format);
  save_vectors(queries, dir / ("queries" + ext_of(format)), format);
  fmt::print("wrote {} base and {} query vectors (dim {}) to {}\n", base.count(), queries.count(),
             a.d, dir.string());
  if (a.k > 0 && a.nq > 0) {
    const auto gt = brute_force_knn(base, queries, a.k, parse_metric(a.metric), c.threads);
    save_ground_truth(gt, dir / "gt.ivecs", dir / "gt_dist.fvecs");
    fmt::print("wrote top-{} ground truth\n", a.k);
  }
}

// ---- gt -------------------------------------------------------------------

struct GtArgs {
  std::string base, queries, out_ids, out_dists;
  std::size_t k = 100;
  std::string metric = "l2";
};

void cmd_gt(const GtArgs& a, const Common& c) {
  const auto base = load_any(a.base);
  const auto queries = load_any(a.queries);
  const auto gt = brute_force_knn(base, queries, a.k, parse_metric(a.metric), c.threads);
  save_ground_truth(gt, a.out_ids, a.out_dists);
  fmt::print("wrote top-{} ground truth for {} queries\n", a.k, gt.num_queries);
}

// ---- build ----------------------------------------------------------------

struct BuildArgs {
  std::string base, out;
  std::size_t nlist = 1024;
  std::size_t m = 16;
  std::string metric = "l2";
  bool no_residual = false;
  std::size_t kmeans_iters = 25;
};

BuildParams build_params(std::size_t nlist, std::size_t m, const std::string& metric,
                         bool no_residual, std::size_t iters, const Common& c) {
  BuildParams p;
  p.nlist = nlist;
  p.m = m;
  p.metric = parse_metric(metric);
  p.residual = !no_residual;
  p.kmeans_iters = iters;
  p.seed = c.seed;
  p.threads = c.threads;
  return p;
}

void cmd_build(const BuildArgs& a, const Common& c) {
  const auto base = load_any(a.base);
  const auto index =
      build_index(base, build_params(a.nlist, a.m, a.metric, a.no_residual, a.kmeans_iters, c));
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_index(index, a.out);
  fmt::print("indexed {} vectors: nlist {}, {}-byte codes\n", index.size(), index.nlist(),
             index.codebook.code_bytes());
}

// ---- search ---------------------------------------------------------------

struct SearchArgs {
  std::string index, queries, base, out;
  std::string gt_ids;
  std::string nss_trace;
  std::size_t nprobe = 16;
  std::size_t nrerank = 1000;
  std::size_t k = 100;
  bool no_rerank = false;
};

void cmd_search(const SearchArgs& a, const Common& c) {
  const auto index = load_index(a.index);
  const auto queries = load_any(a.queries);
  std::optional<VectorDataset> base;
  if (!a.no_rerank || !a.nss_trace.empty()) {
    if (a.base.empty()) throw ArgumentError("--base is required for reranking");
    base = load_any(a.base);
  }
  const SearchParams sp{a.nprobe, a.nrerank, a.k, !a.no_rerank};
  const auto res = search_batch(index, queries, sp, base ? &*base : nullptr, c.threads);

  auto out = open_out(a.out);
  out << "query,rank,id,dist\n";
  for (std::size_t q = 0; q < res.results.size(); ++q) {
    for (std::size_t r = 0; r < res.results[q].size(); ++r) {
      fmt::print(out, "{},{},{},{}\n", q, r, res.results[q][r].id, res.results[q][r].dist);
    }
  }
  if (!a.gt_ids.empty()) {
    const auto ids = load_ivecs(a.gt_ids);
    GroundTruth gt;
    gt.k = ids.cols;
    gt.num_queries = ids.rows;
    gt.neighbors.assign(ids.data.begin(), ids.data.end());
    gt.distances.assign(ids.data.size(), 0.0f);
    fmt::print("recall@{} = {}\n", a.k, recall_at_k(res.ids(), gt, a.k));
  }
  if (!a.nss_trace.empty()) {
    const auto cal = calibration_for(c);
    const auto hbf = cal.backend(BackendKind::Hbf);
    const auto layout = make_layout(hbf.hbf.stack, hbf.hbf.phys, hbf.hbf.stacks, hbf.hbf.channels,
                                    base->count(), VectorShape::of(*base).vector_bytes(),
                                    base->id_base());
    std::vector<RerankRequest> reqs;
    for (std::size_t q = 0; q < queries.count(); ++q) {
      reqs.push_back({static_cast<std::uint32_t>(q), res.trace.queries[q].candidates, queries.row(q)});
    }
    const auto sim = simulate_rerank(reqs, *base, index.metric, std::min<std::size_t>(a.k, 256),
                                     hbf.hbf.nss, hbf.hbf.stack, layout);
    auto trace_out = open_out(a.nss_trace);
    write_nss_trace_csv(trace_out, sim.trace);
  }
  fmt::print("searched {} queries\n", queries.count());
}

// ---- experiment -----------------------------------------------------------

struct ExperimentArgs {
  std::string base, queries, gt_ids, gt_dists, index;
  std::size_t synthetic_n = 0;
  std::size_t synthetic_d = 32;
  std::size_t synthetic_nq = 100;
  std::size_t clusters = 64;
  std::size_t nlist = 1024;
  std::size_t m = 16;
  std::string metric = "l2";
  bool no_residual = false;
  std::size_t kmeans_iters = 25;
  std::vector<std::size_t> nprobe = {1, 4, 16, 64};
  std::vector<std::size_t> nrerank = {1000};
  std::size_t k = 100;
  std::vector<std::size_t> batch = {1, 16, 64, 256};
  std::vector<std::string> backends = {"dram", "ssd", "hbf"};
  std::vector<double> recall_targets;
  bool no_rerank_baseline = false;
  bool rerank_off = false;
  bool overlap = false;
  std::string out;
  std::string frontier_out;
};

void cmd_experiment(const ExperimentArgs& a, const Common& c) {
  const auto cal = calibration_for(c);
  ExperimentData data;
  if (a.synthetic_n > 0) {
    data = synthetic_experiment_data(a.synthetic_n, a.synthetic_d, a.synthetic_nq, a.k, c.seed,
                                     a.clusters, parse_metric(a.metric), c.threads);
  } else {
    if (a.base.empty() || a.queries.empty()) {
      throw ArgumentError("give --base and --queries, or --synthetic-n");
    }
    data.base = load_any(a.base);
    data.queries = load_any(a.queries);
    if (!a.gt_ids.empty()) {
      if (a.gt_dists.empty()) throw ArgumentError("--gt-ids needs --gt-dists");
      data.truth = load_ground_truth(a.gt_ids, a.gt_dists);
    }
  }
  ExperimentSpec spec;
  spec.index = build_params(a.nlist, a.m, a.metric, a.no_residual, a.kmeans_iters, c);
  spec.nprobe = a.nprobe;
  spec.nrerank = a.nrerank;
  spec.k = a.k;
  spec.rerank = !a.rerank_off;
  spec.include_no_rerank = a.no_rerank_baseline || a.rerank_off;
  spec.batch_sizes = a.batch;
  spec.backends.clear();
  for (const auto& b : a.backends) spec.backends.push_back(parse_backend(b));
  spec.recall_targets = a.recall_targets;
  spec.overlap = a.overlap;
  spec.seed = c.seed;
  spec.threads = c.threads;

  std::optional<IvfPqIndex> prebuilt;
  if (!a.index.empty()) prebuilt = load_index(a.index);
  const auto report = run_experiment(spec, data, cal, prebuilt ? &*prebuilt : nullptr);

  auto csv = open_out(a.out);
  write_report_csv(csv, report.rows);
  auto sidecar = open_out(a.out + ".json");
  write_report_json(sidecar, report);
  if (!a.frontier_out.empty()) {
    auto fr = open_out(a.frontier_out);
    write_report_csv(fr, frontier(report.rows));
  }
  fmt::print("wrote {} report rows to {}\n", report.rows.size(), a.out);
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string grid = "full";
  std::vector<std::uint32_t> layers, pages, blocks;
  std::uint32_t dies = 8;
  std::string out;
  std::string long_out;
  bool select = false;
  std::optional<double> capacity_weight, bandwidth_weight, min_capacity_gb, max_latency_us;
  bool no_latency_ceiling = false;
  std::size_t workload_n = 0;
  std::size_t workload_d = 32;
  std::size_t workload_nq = 64;
  std::size_t workload_nlist = 256;
  std::size_t workload_nprobe = 16;
  std::size_t workload_nrerank = 1000;
  std::size_t workload_batch = 64;
};

void cmd_sweep(const SweepArgs& a, const Common& c) {
  auto cal = calibration_for(c);
  SweepSpec spec;
  if (a.grid == "full") {
    spec = SweepSpec::full_grid();
  } else if (a.grid == "baseline") {
    spec = {{kBaselineSubarray.wl_layers},
            {kBaselineSubarray.page_bytes},
            {kBaselineSubarray.blocks_per_subarray},
            8};
  } else {
    throw ArgumentError(fmt::format("unknown grid '{}' (full or baseline)", a.grid));
  }
  if (!a.layers.empty()) spec.wl_layers = a.layers;
  if (!a.pages.empty()) spec.page_bytes = a.pages;
  if (!a.blocks.empty()) spec.blocks = a.blocks;
  spec.dies = a.dies;

  std::optional<SweepWorkload> workload;
  IvfPqIndex index;
  if (a.workload_n > 0) {
    const auto data = synthetic_experiment_data(a.workload_n, a.workload_d, a.workload_nq, 0,
                                                c.seed, 64, Metric::L2, c.threads);
    BuildParams bp;
    bp.nlist = a.workload_nlist;
    bp.seed = c.seed;
    bp.threads = c.threads;
    index = build_index(data.base, bp);
    const auto res = search_batch(index, data.queries,
                                  {a.workload_nprobe, a.workload_nrerank, 1, true}, &data.base,
                                  c.threads);
    workload = SweepWorkload{&index, res.trace, VectorShape::of(data.base), a.workload_batch};
  }
  const auto rows = sweep(spec, cal, workload ? &*workload : nullptr);
  auto out = open_out(a.out);
  write_sweep_csv(out, rows);
  if (!a.long_out.empty()) {
    auto lo = open_out(a.long_out);
    write_sweep_long_csv(lo, rows);
  }
  fmt::print("wrote {} sweep rows to {}\n", rows.size(), a.out);
  if (a.select) {
    DseWeights w = cal.dse;
    if (a.capacity_weight) w.capacity_weight = *a.capacity_weight;
    if (a.bandwidth_weight) w.bandwidth_weight = *a.bandwidth_weight;
    if (a.min_capacity_gb) w.min_capacity_gb = *a.min_capacity_gb;
    if (a.max_latency_us) w.max_latency_us = *a.max_latency_us;
    if (a.no_latency_ceiling) w.max_latency_us.reset();
    const auto best = select_baseline(rows, w);
    fmt::print("baseline: {} layers, {} B page, {} blocks ({} GB, {} GB/s, {} us)\n",
               best.config.wl_layers, best.config.page_bytes, best.config.blocks_per_subarray,
               static_cast<double>(best.capacity_bytes) / 1e9, best.bandwidth_gbps,
               best.latency_us);
  }
}

// ---- frontier -------------------------------------------------------------

struct FrontierArgs {
  std::string report, out, backend;
  std::size_t batch = 0;
};

void cmd_frontier(const FrontierArgs& a, const Common&) {
  std::ifstream in(a.report);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", a.report));
  auto rows = read_report_csv(in);
  std::vector<SimRow> kept;
  for (const auto& r : rows) {
    if (!a.backend.empty() && r.backend != a.backend) continue;
    if (a.batch != 0 && r.batch != a.batch) continue;
    kept.push_back(r);
  }
  if (kept.empty()) throw ArgumentError("no report rows match the filters");
  auto out = open_out(a.out);
  const auto f = frontier(kept);
  write_report_csv(out, f);
  fmt::print("{} of {} rows on the frontier\n", f.size(), kept.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IVF-PQ search with rerank-backend and flash-stack models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON file of subcommand option values; flags override it");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  Common common;
  GenArgs gen;
  GtArgs gt;
  BuildArgs build;
  SearchArgs search;
  ExperimentArgs exp;
  SweepArgs sw;
  FrontierArgs fr;

  auto* g = app.add_subcommand("gen", "Generate a synthetic base/query set (and ground truth)");
  add_common(g, common);
  g->add_option("--n", gen.n, "Base vectors");
  g->add_option("--d", gen.d, "Dimension");
  g->add_option("--nq", gen.nq, "Query vectors");
  g->add_option("--k", gen.k, "Also write top-k ground truth (0 = skip)");
  g->add_option("--dist", gen.dist, "uniform or mixture");
  g->add_option("--clusters", gen.clusters, "Mixture components");
  g->add_option("--spread", gen.spread, "Per-dimension std-dev around each center");
  g->add_option("--format", gen.format, "fvecs or bvecs");
  g->add_option("--metric", gen.metric, "l2 or ip (ground truth)");
  g->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  auto* t = app.add_subcommand("gt", "Exact k-NN ground truth");
  add_common(t, common);
  t->add_option("--base", gt.base)->required();
  t->add_option("--queries", gt.queries)->required();
  t->add_option("--k", gt.k);
  t->add_option("--metric", gt.metric);
  t->add_option("--out-ids", gt.out_ids, "ivecs of neighbor ids")->required();
  t->add_option("--out-dists", gt.out_dists, "fvecs of distances")->required();

  auto* b = app.add_subcommand("build", "Train and write an IVF-PQ index");
  add_common(b, common);
  b->add_option("--base", build.base)->required();
  b->add_option("--nlist", build.nlist);
  b->add_option("--m", build.m, "Sub-quantizers (bytes per code)");
  b->add_option("--metric", build.metric);
  b->add_flag("--no-residual", build.no_residual, "Encode vectors instead of residuals");
  b->add_option("--kmeans-iters", build.kmeans_iters);
  b->add_option("--out", build.out)->required();

  auto* s = app.add_subcommand("search", "Search queries against an index");
  add_common(s, common);
  s->add_option("--index", search.index)->required();
  s->add_option("--queries", search.queries)->required();
  s->add_option("--base", search.base, "Base vectors for reranking");
  s->add_option("--nprobe", search.nprobe);
  s->add_option("--nrerank", search.nrerank);
  s->add_option("--k", search.k);
  s->add_flag("--no-rerank", search.no_rerank);
  s->add_option("--gt-ids", search.gt_ids, "Ground-truth ivecs; prints recall");
  s->add_option("--nss-trace", search.nss_trace, "Per-query near-storage trace CSV");
  s->add_option("--out", search.out, "Results CSV")->required();

  auto* e = app.add_subcommand("experiment", "Recall/latency/throughput grid over backends");
  add_common(e, common);
  e->add_option("--base", exp.base);
  e->add_option("--queries", exp.queries);
  e->add_option("--gt-ids", exp.gt_ids);
  e->add_option("--gt-dists", exp.gt_dists);
  e->add_option("--index", exp.index, "Prebuilt index (skips training)");
  e->add_option("--synthetic-n", exp.synthetic_n, "Generate a mixture corpus of this size");
  e->add_option("--synthetic-d", exp.synthetic_d);
  e->add_option("--synthetic-nq", exp.synthetic_nq);
  e->add_option("--clusters", exp.clusters);
  e->add_option("--nlist", exp.nlist);
  e->add_option("--m", exp.m);
  e->add_option("--metric", exp.metric);
  e->add_flag("--no-residual", exp.no_residual);
  e->add_option("--kmeans-iters", exp.kmeans_iters);
  e->add_option("--nprobe", exp.nprobe)->delimiter(',');
  e->add_option("--nrerank", exp.nrerank)->delimiter(',');
  e->add_option("--k", exp.k);
  e->add_option("--batch", exp.batch)->delimiter(',');
  e->add_option("--backends", exp.backends)->delimiter(',');
  e->add_option("--recall-targets", exp.recall_targets)->delimiter(',');
  e->add_flag("--no-rerank-baseline", exp.no_rerank_baseline, "Add ADC-only rows");
  e->add_flag("--rerank-off", exp.rerank_off, "Only ADC-only rows");
  e->add_flag("--overlap", exp.overlap, "Pipelined stages for throughput");
  e->add_option("--out", exp.out, "Report CSV (metadata goes to <out>.json)")->required();
  e->add_option("--frontier-out", exp.frontier_out);

  auto* w = app.add_subcommand("sweep", "Flash geometry design-space sweep");
  add_common(w, common);
  w->add_option("--grid", sw.grid, "full or baseline");
  w->add_option("--layers", sw.layers)->delimiter(',');
  w->add_option("--pages", sw.pages)->delimiter(',');
  w->add_option("--blocks", sw.blocks)->delimiter(',');
  w->add_option("--dies", sw.dies);
  w->add_option("--out", sw.out)->required();
  w->add_option("--long-out", sw.long_out, "Long-format CSV for plotting");
  w->add_flag("--select", sw.select, "Print the selected baseline");
  w->add_option("--capacity-weight", sw.capacity_weight);
  w->add_option("--bandwidth-weight", sw.bandwidth_weight);
  w->add_option("--min-capacity-gb", sw.min_capacity_gb);
  w->add_option("--max-latency-us", sw.max_latency_us);
  w->add_flag("--no-latency-ceiling", sw.no_latency_ceiling);
  w->add_option("--workload-n", sw.workload_n, "Couple qps from a synthetic workload");
  w->add_option("--workload-d", sw.workload_d);
  w->add_option("--workload-nq", sw.workload_nq);
  w->add_option("--workload-nlist", sw.workload_nlist);
  w->add_option("--workload-nprobe", sw.workload_nprobe);
  w->add_option("--workload-nrerank", sw.workload_nrerank);
  w->add_option("--workload-batch", sw.workload_batch);

  auto* f = app.add_subcommand("frontier", "Recall/qps Pareto frontier of a report");
  add_common(f, common);
  f->add_option("--report", fr.report)->required();
  f->add_option("--out", fr.out)->required();
  f->add_option("--backend", fr.backend);
  f->add_option("--batch", fr.batch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::ConfigError& err) {
    app.exit(err);
    return kModel;
  } catch (const CLI::FileError& err) {
    app.exit(err);
    return kData;
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*g) cmd_gen(gen, common);
    if (*t) cmd_gt(gt, common);
    if (*b) cmd_build(build, common);
    if (*s) cmd_search(search, common);
    if (*e) cmd_experiment(exp, common);
    if (*w) cmd_sweep(sw, common);
    if (*f) cmd_frontier(fr, common);
  } catch (const ArgumentError& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kUsage;
  } catch (const FormatError& err) {
    fmt::print(std::cerr, "data error: {}\n", err.what());
    return kData;
  } catch (const SetupError& err) {
    fmt::print(std::cerr, "data error: {}\n", err.what());
    return kData;
  } catch (const fs::filesystem_error& err) {
    fmt::print(std::cerr, "data error: {}\n", err.what());
    return kData;
  } catch (const Error& err) {
    fmt::print(std::cerr, "model error: {}\n", err.what());
    return kModel;
  }
  return kOk;
}
