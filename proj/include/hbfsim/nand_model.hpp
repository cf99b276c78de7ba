#pragma once

#include <cstddef>
#include <cstdint>

namespace hbfsim {

// Cell-array geometry shared by every subarray configuration.
struct NandPhysicalParams {
  double vc_hole_diameter_nm = 145.0;
  double bl_pitch_nm = 40.0;
  double vc_hole_pitch_nm = 248.0;
  double wl_staircase_pitch_nm = 725.0;
  std::uint32_t ssl_count = 2;
  std::uint32_t sub_block_count = 2;
  std::uint32_t bits_per_cell = 1;

  void validate() const;
};

struct NandSubarrayConfig {
  std::uint32_t wl_layers = 256;
  std::uint32_t page_bytes = 4096;  // bitlines / 8
  std::uint32_t blocks_per_subarray = 64;

  // True when every knob lies on the swept grid; other values are accepted
  // as extrapolation.
  bool on_grid() const;
  friend bool operator==(const NandSubarrayConfig&, const NandSubarrayConfig&) = default;
};

inline constexpr NandSubarrayConfig kBaselineSubarray{256, 4096, 64};

// Model coefficients. Energy and latency are linear in page width and in the
// blocks x layers loading; the constant energy term is derived from the
// anchor so the anchor configuration reads at exactly anchor_energy_pj.
struct NandCalibration {
  double anchor_energy_pj = 30.0;
  NandSubarrayConfig anchor = kBaselineSubarray;
  double energy_beta_pj_per_byte = 4.0 / 4096.0;
  double energy_gamma_pj_per_block_layer = 5.0 / 16384.0;

  double t_sense_us = 2.5;
  double rho_bl_us_per_byte = 0.5 / 4096.0;
  double rho_wl_us_per_block_layer = 2.0 / 16384.0;
  double stack_overhead_us = 0.5;

  // Area: cell array plus decoder/staircase strip along the wordlines and a
  // sense-amp strip along the bitlines, then a fractional periphery overhead.
  double periphery_fraction = 0.20;
  double decoder_strip_um = 40.0;
  double sense_strip_um = 140.0;
  double die_area_mm2 = 460.0;
  std::uint32_t tsv_count = 4096;
  double tsv_pitch_um = 50.0;

  std::uint32_t dies = 8;
  double power_envelope_w = 30.0;
  double interface_cap_gbps = 460.0;

  double energy_alpha_pj() const;
  double tsv_region_mm2() const;
  void validate() const;
};

struct SubarrayMetrics {
  std::uint64_t capacity_bits = 0;
  double read_energy_pj_per_bit = 0.0;
  double read_latency_us = 0.0;
  double area_mm2 = 0.0;
};

std::uint64_t pages_per_block(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg);

SubarrayMetrics subarray_metrics(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                                 const NandCalibration& cal = {});

struct DieCapacity {
  std::uint64_t subarrays_per_die = 0;
  std::uint64_t capacity_bytes = 0;
};

DieCapacity die_capacity(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                         double die_area_mm2, double tsv_region_mm2,
                         const NandCalibration& cal = {});

struct HbfStackModel {
  NandSubarrayConfig config;
  SubarrayMetrics subarray;
  std::uint32_t dies = 8;
  std::uint64_t subarrays_per_die = 0;
  double tsv_pitch_um = 50.0;
  double power_envelope_w = 30.0;
  double interface_cap_gbps = 460.0;

  std::uint64_t die_capacity_bytes = 0;
  std::uint64_t stack_capacity_bytes = 0;
  double read_energy_pj_per_bit = 0.0;
  double sustained_read_bw_gbps = 0.0;
  double access_latency_us = 0.0;
};

// min(envelope / energy, interface cap), decimal GB/s.
double power_constrained_bandwidth(double power_envelope_w, double interface_cap_gbps,
                                   double energy_pj_per_bit);
double power_constrained_bandwidth(const HbfStackModel& stack, double energy_pj_per_bit);

HbfStackModel stack_model(const NandPhysicalParams& phys, const NandSubarrayConfig& cfg,
                          std::uint32_t dies, const NandCalibration& cal = {});

}  // namespace hbfsim
