#pragma once

#include <cstdint>

// Unit conventions: bandwidth "GB/s" is decimal (1e9 bytes/s). Capacity is
// carried in bytes; the 512 GB stack anchor is checked in decimal GB as
// well. Binary helpers exist for subarray-level MiB figures.
namespace hbfsim::units {

inline constexpr double kBitsPerByte = 8.0;
inline constexpr double kDecimalGB = 1e9;
inline constexpr double kMiB = 1024.0 * 1024.0;
inline constexpr double kGiB = 1024.0 * kMiB;
inline constexpr double kPicoPerUnit = 1e12;

inline constexpr double bytes_to_gb(double bytes) { return bytes / kDecimalGB; }
inline constexpr double gb_to_bytes(double gb) { return gb * kDecimalGB; }

// GB/s -> bytes per microsecond.
inline constexpr double gbps_to_bytes_per_us(double gbps) { return gbps * 1e3; }

// Power (W) over per-bit energy (pJ) -> decimal GB/s.
inline constexpr double power_limited_gbps(double watts, double pj_per_bit) {
  const double bits_per_second = watts * kPicoPerUnit / pj_per_bit;
  return bits_per_second / kBitsPerByte / kDecimalGB;
}

inline constexpr double us_to_ms(double us) { return us * 1e-3; }

}  // namespace hbfsim::units
