#pragma once

#include <cstddef>
#include <span>

#include "hbfsim/types.hpp"

namespace hbfsim {

// Reference distances. Summation is strictly left to right over dimensions,
// so results are bit-identical wherever these are used (ground truth, index
// rerank, near-storage unit). L2 is squared Euclidean; InnerProduct is the
// negated dot product.
inline float squared_l2(std::span<const float> a, std::span<const float> b) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

inline float negated_dot(std::span<const float> a, std::span<const float> b) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return -sum;
}

inline float metric_distance(Metric metric, std::span<const float> a,
                             std::span<const float> b) {
  return metric == Metric::L2 ? squared_l2(a, b) : negated_dot(a, b);
}

}  // namespace hbfsim
