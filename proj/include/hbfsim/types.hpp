#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace hbfsim {

using VectorId = std::uint32_t;
inline constexpr VectorId kInvalidId = std::numeric_limits<VectorId>::max();

// Inner product is handled by negating similarities so every code path
// minimizes.
enum class Metric : std::uint32_t { L2 = 0, InnerProduct = 1 };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

// (dist, id) ordered lexicographically: ascending distance, ties to lower id.
struct Candidate {
  VectorId id = kInvalidId;
  float dist = std::numeric_limits<float>::infinity();

  friend bool operator<(const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
  }
  friend bool operator==(const Candidate& a, const Candidate& b) = default;
};

}  // namespace hbfsim
