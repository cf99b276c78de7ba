#include "hbfsim/calibration.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <set>

#include <fmt/core.h>

#include "hbfsim/errors.hpp"

#ifndef HBFSIM_DEFAULT_CALIBRATION_DIR
#define HBFSIM_DEFAULT_CALIBRATION_DIR "calibration"
#endif

namespace hbfsim {

using nlohmann::json;

namespace {

// Reads fields from a JSON object, remembering which keys were consumed.
class JsonIn {
 public:
  JsonIn(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", ctx_));
  }

  void operator()(const char* key, double& v) {
    if (const json* x = take(key)) {
      if (!x->is_number()) throw type_error(key, "a number");
      v = x->get<double>();
    }
  }
  void operator()(const char* key, std::uint32_t& v) {
    if (const json* x = take(key)) {
      if (!x->is_number_unsigned() || x->get<std::uint64_t>() > UINT32_MAX) {
        throw type_error(key, "a non-negative integer");
      }
      v = x->get<std::uint32_t>();
    }
  }
  void operator()(const char* key, std::optional<double>& v) {
    if (const json* x = take(key)) {
      if (x->is_null()) {
        v.reset();
      } else if (x->is_number()) {
        v = x->get<double>();
      } else {
        throw type_error(key, "a number or null");
      }
    }
  }
  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    if (const json* x = take(key)) {
      JsonIn child(*x, ctx_ + "." + key);
      fn(child);
      child.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (key != "provenance" && !seen_.count(key)) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", ctx_, key));
      }
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  ConfigError type_error(const char* key, const char* what) const {
    return ConfigError(fmt::format("{}.{}: expected {}", ctx_, key, what));
  }

  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

class JsonOut {
 public:
  explicit JsonOut(json& j) : j_(j) { j_ = json::object(); }

  template <typename T>
  void operator()(const char* key, const T& v) { j_[key] = v; }
  void operator()(const char* key, const std::optional<double>& v) {
    j_[key] = v ? json(*v) : json(nullptr);
  }
  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    JsonOut child(j_[key]);
    fn(child);
  }

 private:
  json& j_;
};

template <typename V, typename Cal>
void visit_nand(V& v, Cal& c) {
  v.section("physical", [&](auto& s) {
    s("vc_hole_diameter_nm", c.phys.vc_hole_diameter_nm);
    s("bl_pitch_nm", c.phys.bl_pitch_nm);
    s("vc_hole_pitch_nm", c.phys.vc_hole_pitch_nm);
    s("wl_staircase_pitch_nm", c.phys.wl_staircase_pitch_nm);
    s("ssl_count", c.phys.ssl_count);
    s("sub_block_count", c.phys.sub_block_count);
    s("bits_per_cell", c.phys.bits_per_cell);
  });
  v.section("energy", [&](auto& s) {
    s("anchor_pj_per_bit", c.nand.anchor_energy_pj);
    s("anchor_wl_layers", c.nand.anchor.wl_layers);
    s("anchor_page_bytes", c.nand.anchor.page_bytes);
    s("anchor_blocks", c.nand.anchor.blocks_per_subarray);
    s("beta_pj_per_bit_per_page_byte", c.nand.energy_beta_pj_per_byte);
    s("gamma_pj_per_bit_per_block_layer", c.nand.energy_gamma_pj_per_block_layer);
  });
  v.section("latency", [&](auto& s) {
    s("t_sense_us", c.nand.t_sense_us);
    s("rho_bl_us_per_page_byte", c.nand.rho_bl_us_per_byte);
    s("rho_wl_us_per_block_layer", c.nand.rho_wl_us_per_block_layer);
    s("stack_overhead_us", c.nand.stack_overhead_us);
  });
  v.section("area", [&](auto& s) {
    s("periphery_fraction", c.nand.periphery_fraction);
    s("decoder_strip_um", c.nand.decoder_strip_um);
    s("sense_strip_um", c.nand.sense_strip_um);
    s("die_area_mm2", c.nand.die_area_mm2);
    s("tsv_count", c.nand.tsv_count);
    s("tsv_pitch_um", c.nand.tsv_pitch_um);
  });
  v.section("stack", [&](auto& s) {
    s("dies", c.nand.dies);
    s("power_envelope_w", c.nand.power_envelope_w);
    s("interface_cap_gbps", c.nand.interface_cap_gbps);
  });
}

template <typename V, typename B>
void visit_link(V& v, B& b) {
  v("link_bw_gbps", b.link_bw_gbps);
  v("link_latency_us", b.link_latency_us);
  v("device_bw_gbps", b.device_bw_gbps);
  v("device_latency_us", b.device_latency_us);
  v("random_read_granularity_bytes", b.random_read_granularity_bytes);
  v("per_request_overhead_us", b.per_request_overhead_us);
  v("parallelism", b.parallelism);
}

template <typename V, typename H>
void visit_hbf(V& v, H& h) {
  v("stacks", h.stacks);
  v("channels", h.channels);
  v("per_request_overhead_us", h.per_request_overhead_us);
  v.section("geometry", [&](auto& s) {
    s("wl_layers", h.geometry.wl_layers);
    s("page_bytes", h.geometry.page_bytes);
    s("blocks_per_subarray", h.geometry.blocks_per_subarray);
  });
  v.section("search_unit", [&](auto& s) {
    s("queue_count", h.search_unit.queue_count);
    s("queue_bytes", h.search_unit.queue_bytes);
    s("queue_capacity_entries", h.search_unit.queue_capacity_entries);
    s("mac_count", h.search_unit.mac_count);
    s("sorter_points", h.search_unit.sorter_points);
    s("clock_ghz", h.search_unit.clock_ghz);
    s("area_mm2", h.search_unit.area_mm2);
    s("power_mw", h.search_unit.power_mw);
  });
}

template <typename V, typename G>
void visit_gpu(V& v, G& g) {
  v("effective_tflops", g.effective_tflops);
  v("memory_bw_gbps", g.memory_bw_gbps);
  v("lookups_per_second", g.lookups_per_second);
}

template <typename V, typename D>
void visit_dse(V& v, D& d) {
  v("capacity_weight", d.capacity_weight);
  v("bandwidth_weight", d.bandwidth_weight);
  v("min_capacity_gb", d.min_capacity_gb);
  v("max_latency_us", d.max_latency_us);
}

template <typename V, typename C>
void visit_file(V& v, const std::string& file, C& cal) {
  if (file == "nand.json") {
    visit_nand(v, cal);
  } else if (file == "dram.json") {
    visit_link(v, cal.dram);
  } else if (file == "ssd.json") {
    visit_link(v, cal.ssd);
  } else if (file == "hbf.json") {
    visit_hbf(v, cal.hbf);
  } else if (file == "gpu.json") {
    visit_gpu(v, cal.gpu);
  } else if (file == "dse.json") {
    visit_dse(v, cal.dse);
  } else {
    throw ConfigError(fmt::format("unknown calibration file '{}'", file));
  }
}

}  // namespace

BackendModel Calibration::hbf_backend_for(const NandSubarrayConfig& cfg) const {
  BackendModel b = hbf_backend(phys, nand, cfg);
  b.per_request_overhead_us = hbf.per_request_overhead_us;
  b.hbf.nss = hbf.search_unit;
  b.hbf.stacks = hbf.stacks;
  b.hbf.channels = hbf.channels;
  return b;
}

BackendModel Calibration::backend(BackendKind kind) const {
  switch (kind) {
    case BackendKind::Dram: return dram;
    case BackendKind::Ssd: return ssd;
    case BackendKind::Hbf: return hbf_backend_for(hbf.geometry);
  }
  throw ConfigError("unknown backend kind");
}

void Calibration::validate() const {
  phys.validate();
  nand.validate();
  dram.validate();
  ssd.validate();
  backend(BackendKind::Hbf).validate();
  if (!(gpu.effective_tflops > 0) || !(gpu.memory_bw_gbps > 0) || !(gpu.lookups_per_second > 0)) {
    throw ConfigError("gpu calibration must be positive");
  }
  if (dse.capacity_weight < 0 || dse.bandwidth_weight < 0) {
    throw ConfigError("selection weights must be non-negative");
  }
}

Calibration default_calibration() {
  Calibration cal;
  for (const char* f : kCalibrationFiles) cal.sources.emplace_back(f, "builtin");
  return cal;
}

std::filesystem::path resolve_calibration_dir(const std::optional<std::filesystem::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kCalibrationEnvVar); env != nullptr && *env != '\0') {
    return env;
  }
  return HBFSIM_DEFAULT_CALIBRATION_DIR;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

void apply_calibration_json(Calibration& cal, const std::string& file, const json& j) {
  JsonIn in(j, file);
  visit_file(in, file, cal);
  in.finish();
}

Calibration load_calibration(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError(fmt::format("calibration directory '{}' does not exist", dir.string()));
  }
  Calibration cal;
  for (const char* file : kCalibrationFiles) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) {
      cal.sources.emplace_back(file, "builtin");
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (!in.good() && !in.eof()) throw ConfigError(fmt::format("cannot read '{}'", path.string()));
    json j;
    try {
      j = json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
    }
    apply_calibration_json(cal, file, j);
    cal.sources.emplace_back(file, fnv1a_hex(bytes));
  }
  cal.validate();
  return cal;
}

json calibration_to_json(const Calibration& cal) {
  json out = json::object();
  for (const char* file : kCalibrationFiles) {
    JsonOut o(out[file]);
    visit_file(o, file, cal);
  }
  return out;
}

}  // namespace hbfsim
