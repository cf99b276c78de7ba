#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hbfsim/backend.hpp"
#include "hbfsim/nand_model.hpp"
#include "hbfsim/nss_unit.hpp"

namespace hbfsim {

// Two-parameter roofline for the GPU-resident stages.
struct GpuCalibration {
  double effective_tflops = 10.0;
  double memory_bw_gbps = 1300.0;
  double lookups_per_second = 1e12;
};

struct HbfCalibration {
  std::uint32_t stacks = 3;
  std::uint32_t channels = 8;
  double per_request_overhead_us = 1.0;
  NandSubarrayConfig geometry = kBaselineSubarray;
  NssConfig search_unit;
};

// Baseline score: capacity^w_c x bandwidth^w_b (both normalized to the
// sweep maximum) over rows meeting the capacity floor and latency ceiling.
struct DseWeights {
  double capacity_weight = 1.0;
  double bandwidth_weight = 1.0;
  double min_capacity_gb = 512.0;
  std::optional<double> max_latency_us = 5.5;
};

struct Calibration {
  NandPhysicalParams phys;
  NandCalibration nand;
  BackendModel dram = dram_backend();
  BackendModel ssd = ssd_backend();
  HbfCalibration hbf;
  GpuCalibration gpu;
  DseWeights dse;
  // (file name, FNV-1a hash of its bytes or "builtin") per calibration file.
  std::vector<std::pair<std::string, std::string>> sources;

  BackendModel backend(BackendKind kind) const;
  // HBF path built on a different geometry (design-space coupling).
  BackendModel hbf_backend_for(const NandSubarrayConfig& cfg) const;
  void validate() const;
};

Calibration default_calibration();

inline constexpr const char* kCalibrationEnvVar = "HBFSIM_CALIBRATION_DIR";
inline constexpr const char* kCalibrationFiles[] = {"nand.json", "dram.json", "ssd.json",
                                                    "hbf.json",  "gpu.json",  "dse.json"};

// Explicit path, else $HBFSIM_CALIBRATION_DIR, else the directory shipped
// with the sources.
std::filesystem::path resolve_calibration_dir(const std::optional<std::filesystem::path>& flag);

// Reads every calibration file present in `dir`; absent files keep built-in
// defaults. Unknown keys are rejected ("provenance" is allowed anywhere).
Calibration load_calibration(const std::filesystem::path& dir);

// Same schema the files use, one object per file name.
nlohmann::json calibration_to_json(const Calibration& cal);
void apply_calibration_json(Calibration& cal, const std::string& file, const nlohmann::json& j);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace hbfsim
