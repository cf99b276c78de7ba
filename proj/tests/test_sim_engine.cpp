#include <doctest.h>

#include <sstream>

#include "hbfsim/errors.hpp"
#include "hbfsim/sim_engine.hpp"

using namespace hbfsim;

namespace {

SimRow row(const char* backend, double recall, double qps, std::size_t nprobe = 1) {
  SimRow r;
  r.backend = backend;
  r.recall = recall;
  r.qps = qps;
  r.nprobe = nprobe;
  r.batch = 16;
  return r;
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.index.nlist = 32;
  spec.index.m = 4;
  spec.nprobe = {1, 4, 32};
  spec.nrerank = {200};
  spec.k = 10;
  spec.batch_sizes = {1, 16};
  spec.seed = 9;
  return spec;
}

const ExperimentData& small_data() {
  static const ExperimentData data = synthetic_experiment_data(4000, 16, 40, 10, 9, 16);
  return data;
}

}  // namespace

TEST_CASE("gpu stage roofline") {
  const GpuCalibration gpu;
  const auto zero = estimate_gpu_stage_times(1024, 128, 16, 64, 0, gpu);
  CHECK(zero.scan_ms == 0.0);
  const auto a = estimate_gpu_stage_times(1024, 128, 16, 64, 1000000, gpu);
  const auto b = estimate_gpu_stage_times(1024, 128, 16, 64, 2000000, gpu);
  CHECK(b.scan_ms == 2.0 * a.scan_ms);
  // probe: 64*1024*128 flops at 10 TFLOP/s = 0.839 us; bytes (1024*128 + 64*128)*4 at
  // 1300 GB/s = 0.428 us -> compute bound.
  CHECK(a.probe_ms == doctest::Approx(64.0 * 1024 * 128 / 10e12 * 1e3).epsilon(1e-12));
  // scan: 16e6 lookups at 1e12/s = 16 us exceeds 1e6 codes * 20 bytes at 1300 GB/s
  // = 15.4 us -> lookup bound.
  CHECK(a.scan_ms == doctest::Approx(16e6 / 1e12 * 1e3).epsilon(1e-12));
  GpuCalibration slow_mem = gpu;
  slow_mem.memory_bw_gbps = 100.0;
  const auto m = estimate_gpu_stage_times(1024, 128, 16, 64, 1000000, slow_mem);
  CHECK(m.scan_ms == doctest::Approx(1e6 * 20 / 100e9 * 1e3).epsilon(1e-12));
}

TEST_CASE("probe and scan stay below dram rerank at a large-index shape") {
  // nlist 1024 probing 64 lists of ~1000 codes per query, 1000-candidate rerank.
  const auto cal = default_calibration();
  const std::size_t batch = 64;
  const auto g = estimate_gpu_stage_times(1024, 128, 16, batch, batch * 64 * 1000, cal.gpu);
  CandidateTrace t;
  for (std::size_t q = 0; q < batch; ++q) {
    QueryTrace qt;
    for (VectorId i = 0; i < 1000; ++i) qt.candidates.push_back(q * 1000 + i * 7);
    t.queries.push_back(qt);
  }
  const auto rr = rerank_cost(cal.dram, t, {128, 1, 1000000, 0}, batch);
  CHECK(g.probe_ms + g.scan_ms < rr.latency_ms);
}

TEST_CASE("frontier") {
  const std::vector<SimRow> one = {row("hbf", 0.5, 10)};
  CHECK(frontier(one).size() == 1);
  const std::vector<SimRow> two = {row("dram", 0.5, 10), row("hbf", 0.6, 20)};
  const auto f = frontier(two);
  REQUIRE(f.size() == 1);
  CHECK(f[0].backend == "hbf");
  const std::vector<SimRow> many = {row("a", 0.9, 10), row("b", 0.5, 30), row("c", 0.7, 20),
                                    row("d", 0.7, 20), row("e", 0.6, 5)};
  const auto g = frontier(many);
  REQUIRE(g.size() == 4);
  CHECK(g[0].backend == "b");
  CHECK(g[1].backend == "c");
  CHECK(g[2].backend == "d");
  CHECK(g[3].backend == "a");
}

TEST_CASE("select_at_recall picks max qps, ties to smaller nprobe") {
  const std::vector<SimRow> rows = {row("hbf", 0.95, 100, 16), row("hbf", 0.97, 100, 8),
                                    row("hbf", 0.99, 50, 64), row("hbf", 0.80, 900, 1),
                                    row("dram", 0.99, 1000, 1)};
  const auto pick = select_at_recall(rows, 0.95, "hbf", 16);
  REQUIRE(pick);
  CHECK(pick->nprobe == 8);
  CHECK_FALSE(select_at_recall(rows, 0.999, "hbf", 16));
  CHECK_FALSE(select_at_recall(rows, 0.5, "hbf", 64));
}

TEST_CASE("report CSV round trip") {
  std::vector<SimRow> rows = {row("hbf", 0.25, 1234.5), row("ssd", 1.0, 0.125)};
  rows[0].energy_pj = 1e9;
  rows[1].rerank = false;
  std::stringstream ss;
  write_report_csv(ss, rows);
  const auto back = read_report_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].backend == "hbf");
  CHECK(back[0].qps == 1234.5);
  CHECK(back[0].energy_pj == 1e9);
  CHECK_FALSE(back[1].rerank);
  std::stringstream bad("backend,qps\nx,1\n");
  CHECK_THROWS_AS(read_report_csv(bad), FormatError);
  std::stringstream trunc;
  write_report_csv(trunc, rows);
  std::string text = trunc.str();
  text = text.substr(0, text.rfind(',')) + "\n";
  std::stringstream t2(text);
  CHECK_THROWS_AS(read_report_csv(t2), FormatError);
}

TEST_CASE("run_experiment structure and determinism") {
  const auto cal = default_calibration();
  auto spec = small_spec();
  spec.include_no_rerank = true;
  spec.recall_targets = {0.9};
  const auto a = run_experiment(spec, small_data(), cal);
  // per nprobe: 2 "none" rows + 2 batches x 3 backends
  CHECK(a.rows.size() == 3 * (2 + 6));
  CHECK(a.rows[0].backend == "none");
  CHECK_FALSE(a.rows[0].rerank);
  CHECK(a.metadata["schema_version"] == kReportSchemaVersion);
  CHECK(a.metadata["seed"] == 9);
  CHECK(a.metadata.contains("calibration"));
  CHECK(a.metadata["calibration_sources"]["nand.json"] == "builtin");
  CHECK(a.metadata["selections"].size() == 3 * 2);

  spec.threads = 4;
  const auto b = run_experiment(spec, small_data(), cal);
  std::stringstream ca, cb;
  write_report_csv(ca, a.rows);
  write_report_csv(cb, b.rows);
  CHECK(ca.str() == cb.str());
  std::stringstream ja, jb;
  write_report_json(ja, a);
  write_report_json(jb, b);
  CHECK(ja.str() == jb.str());

  for (const auto& r : a.rows) {
    CHECK(r.recall >= 0.0);
    CHECK(r.recall <= 1.0);
    CHECK(r.k == 10);
  }
}

TEST_CASE("rerank-off rows report ADC-only recall") {
  const auto cal = default_calibration();
  auto spec = small_spec();
  spec.nprobe = {4};
  spec.include_no_rerank = true;
  spec.batch_sizes = {16};
  const auto& data = small_data();
  const auto report = run_experiment(spec, data, cal);

  auto bp = spec.index;
  bp.seed = spec.seed;
  const auto index = build_index(data.base, bp);
  const auto res = search_batch(index, data.queries, {4, 10, 10, false}, nullptr);
  const double adc = recall_at_k(res.ids(), *data.truth, 10);
  CHECK(report.rows[0].backend == "none");
  CHECK(report.rows[0].recall == adc);
  CHECK(report.rows[0].rerank_ms == 0.0);
}

TEST_CASE("run_experiment setup errors") {
  const auto cal = default_calibration();
  auto data = small_data();
  data.truth.reset();
  CHECK_THROWS_AS(run_experiment(small_spec(), data, cal), SetupError);
  auto shallow = small_data();
  auto spec = small_spec();
  spec.k = 20;
  spec.nrerank = {50};
  CHECK_THROWS_AS(run_experiment(spec, shallow, cal), SetupError);
  spec = small_spec();
  spec.nprobe.clear();
  CHECK_THROWS_AS(run_experiment(spec, small_data(), cal), ArgumentError);
  spec = small_spec();
  spec.nrerank = {5};
  CHECK_THROWS_AS(run_experiment(spec, small_data(), cal), ArgumentError);
}

TEST_CASE("workload_cost over cyclic windows") {
  const auto cal = default_calibration();
  const auto& data = small_data();
  auto bp = small_spec().index;
  const auto index = build_index(data.base, bp);
  const auto res = search_batch(index, data.queries, {4, 200, 10, true}, &data.base);
  const auto shape = VectorShape::of(data.base);
  const auto dram = cal.backend(BackendKind::Dram);
  // 40 queries in batches of 40: a single window equals the direct composition
  const auto w = workload_cost(index, res.trace, shape, 40, &dram, cal.gpu);
  const auto g = estimate_gpu_stage_times(index, res.trace, cal.gpu);
  const auto rc = rerank_cost(dram, res.trace, shape, 40);
  const auto pc = pipeline_cost({g.probe_ms, g.scan_ms, rc.latency_ms}, 40);
  CHECK(w.latency_ms == doctest::Approx(pc.latency_ms).epsilon(1e-12));
  CHECK(w.qps == doctest::Approx(pc.qps).epsilon(1e-12));
  CHECK(w.bytes_moved == static_cast<double>(rc.bytes_moved));
  CHECK_THROWS_AS(workload_cost(index, res.trace, shape, 0, &dram, cal.gpu), ArgumentError);
  CHECK_THROWS_AS(workload_cost(index, CandidateTrace{}, shape, 4, &dram, cal.gpu), ArgumentError);
}
