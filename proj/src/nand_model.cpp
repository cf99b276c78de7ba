#include "hbfsim/nand_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/core.h>

#include "hbfsim/errors.hpp"
#include "hbfsim/units.hpp"

namespace hbfsim {

namespace {

constexpr std::array<std::uint32_t, 4> kLayerGrid = {64, 128, 192, 256};
constexpr std::array<std::uint32_t, 3> kPageGrid = {1024, 2048, 4096};
constexpr std::array<std::uint32_t, 5> kBlockGrid = {64, 128, 256, 512, 1024};

template <std::size_t N>
bool contains(const std::array<std::uint32_t, N>& set, std::uint32_t v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

void require_config(const NandSubarrayConfig& cfg) {
  if (cfg.wl_layers == 0 || cfg.page_bytes == 0 || cfg.blocks_per_subarray == 0) {
    throw ArgumentError(fmt::format("non-positive subarray geometry ({}L, {} B, {} blocks)",
                                    cfg.wl_layers, cfg.page_bytes, cfg.blocks_per_subarray));
  }
}

double loading(const NandSubarrayConfig& cfg) {
  return static_cast<double>(cfg.blocks_per_subarray) * static_cast<double>(cfg.wl_layers);
}

}  // namespace

void NandPhysicalParams::validate() const {
  if (!(vc_hole_diameter_nm > 0) || !(bl_pitch_nm > 0) || !(vc_hole_pitch_nm > 0) ||
      !(wl_staircase_pitch_nm > 0) || ssl_count == 0 || sub_block_count == 0 ||
      bits_per_cell == 0) {
    throw ArgumentError("physical NAND parameters must all be positive");
  }
}

bool NandSubarrayConfig::on_grid() const {
  return contains(kLayerGrid, wl_layers) && contains(kPageGrid, page_bytes) &&
         contains(kBlockGrid, blocks_per_subarray);
}

double NandCalibration::energy_alpha_pj() const {
  return anchor_energy_pj - energy_beta_pj_per_byte * anchor.page_bytes -
         energy_gamma_pj_per_block_layer * loading(anchor);
}

double NandCalibration::tsv_region_mm2() const {
  return static_cast<double>(tsv_count) * tsv_pitch_um * tsv_pitch_um * 1e-6;
}

void NandCalibration::validate() const {
  require_config(anchor);
  if (!(anchor_energy_pj > 0) || !(energy_beta_pj_per_byte > 0) ||
      !(energy_gamma_pj_per_block_layer > 0)) {
    throw ConfigError("energy coefficients must be positive");
  }
  if (!(energy_alpha_pj() > 0)) {
    throw ConfigError(fmt::format("derived constant energy term {} pJ/bit is not positive",
                                  energy_alpha_pj()));
  }
  if (!(t_sense_us > 0) || !(rho_bl_us_per_byte > 0) || !(rho_wl_us_per_block_layer > 0) ||
      stack_overhead_us < 0) {
    throw ConfigError("latency coefficients must be positive");
  }
  if (periphery_fraction < 0 || decoder_strip_um < 0 || sense_strip_um < 0 ||
      !(die_area_mm2 > 0) || !(tsv_pitch_um > 0)) {
    throw ConfigError("area parameters out of range");
  }
  if (dies == 0 || !(power_envelope_w > 0) || !(interface_cap_gbps > 0)) {
    throw ConfigError("stack parameters must be positive");
  }
}

std::uint64_t pages_per_block(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg) {
  return std::uint64_t{cfg.wl_layers} * phys.ssl_count * phys.sub_block_count;
}

SubarrayMetrics subarray_metrics(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                                 const NandCalibration& cal) {
  phys.validate();
  require_config(cfg);
  SubarrayMetrics out;
  out.capacity_bits = std::uint64_t{cfg.page_bytes} * 8 * pages_per_block(phys, cfg) *
                      cfg.blocks_per_subarray * phys.bits_per_cell;
  out.read_energy_pj_per_bit = cal.energy_alpha_pj() +
                               cal.energy_beta_pj_per_byte * cfg.page_bytes +
                               cal.energy_gamma_pj_per_block_layer * loading(cfg);
  out.read_latency_us = cal.t_sense_us + cal.rho_bl_us_per_byte * cfg.page_bytes +
                        cal.rho_wl_us_per_block_layer * loading(cfg);

  // Width runs along the wordlines (one bitline per bit of the page plus the
  // staircase); height stacks blocks, each a row of hex-packed channel holes
  // across its strings.
  const double um_per_nm = 1e-3;
  const double width_um = cfg.page_bytes * 8.0 * phys.bl_pitch_nm * um_per_nm +
                          cfg.wl_layers * phys.wl_staircase_pitch_nm * um_per_nm +
                          cal.decoder_strip_um;
  const double hole_cell_nm2 = std::sqrt(3.0) / 2.0 * phys.vc_hole_pitch_nm * phys.vc_hole_pitch_nm;
  const double block_pitch_nm =
      phys.ssl_count * phys.sub_block_count * hole_cell_nm2 / phys.bl_pitch_nm +
      phys.vc_hole_diameter_nm;
  const double height_um = cfg.blocks_per_subarray * block_pitch_nm * um_per_nm + cal.sense_strip_um;
  out.area_mm2 = width_um * height_um * 1e-6 * (1.0 + cal.periphery_fraction);
  return out;
}

DieCapacity die_capacity(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                         double die_area_mm2, double tsv_region_mm2, const NandCalibration& cal) {
  const double usable = die_area_mm2 - tsv_region_mm2;
  if (!(usable > 0)) {
    throw ArgumentError(fmt::format("die area {} mm^2 leaves no room beside the {} mm^2 TSV region",
                                    die_area_mm2, tsv_region_mm2));
  }
  const auto sub = subarray_metrics(phys, cfg, cal);
  DieCapacity out;
  out.subarrays_per_die = static_cast<std::uint64_t>(std::floor(usable / sub.area_mm2));
  out.capacity_bytes = out.subarrays_per_die * (sub.capacity_bits / 8);
  return out;
}

double power_constrained_bandwidth(double power_envelope_w, double interface_cap_gbps,
                                   double energy_pj_per_bit) {
  if (!(energy_pj_per_bit > 0)) throw ArgumentError("read energy must be positive");
  return std::min(units::power_limited_gbps(power_envelope_w, energy_pj_per_bit),
                  interface_cap_gbps);
}

double power_constrained_bandwidth(const HbfStackModel& stack, double energy_pj_per_bit) {
  return power_constrained_bandwidth(stack.power_envelope_w, stack.interface_cap_gbps,
                                     energy_pj_per_bit);
}

HbfStackModel stack_model(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                          std::uint32_t dies, const NandCalibration& cal) {
  if (dies == 0) throw ArgumentError("a stack needs at least one die");
  cal.validate();
  HbfStackModel out;
  out.config = cfg;
  out.subarray = subarray_metrics(phys, cfg, cal);
  const auto die = die_capacity(phys, cfg, cal.die_area_mm2, cal.tsv_region_mm2(), cal);
  out.dies = dies;
  out.subarrays_per_die = die.subarrays_per_die;
  out.tsv_pitch_um = cal.tsv_pitch_um;
  out.power_envelope_w = cal.power_envelope_w;
  out.interface_cap_gbps = cal.interface_cap_gbps;
  out.die_capacity_bytes = die.capacity_bytes;
  out.stack_capacity_bytes = die.capacity_bytes * dies;
  out.read_energy_pj_per_bit = out.subarray.read_energy_pj_per_bit;
  out.sustained_read_bw_gbps = power_constrained_bandwidth(out, out.read_energy_pj_per_bit);
  out.access_latency_us = out.subarray.read_latency_us + cal.stack_overhead_us;
  return out;
}

}  // namespace hbfsim
