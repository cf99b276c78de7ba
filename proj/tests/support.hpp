#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the public types.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "hbfsim/dataset.hpp"
#include "hbfsim/types.hpp"

namespace testing {

inline std::vector<float> random_floats(std::size_t n, std::uint64_t seed, float lo = 0.0f,
                                        float hi = 1.0f) {
  std::mt19937_64 gen(seed);
  std::vector<float> out(n);
  for (auto& v : out) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v = lo + static_cast<float>(u) * (hi - lo);
  }
  return out;
}

inline hbfsim::VectorDataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  return hbfsim::VectorDataset::from_floats(d, random_floats(n * d, seed));
}

// Naive distance, left-to-right accumulation in float.
inline float naive_distance(const float* a, const float* b, std::size_t d, hbfsim::Metric m) {
  float s = 0.0f;
  if (m == hbfsim::Metric::L2) {
    for (std::size_t i = 0; i < d; ++i) {
      const float t = a[i] - b[i];
      s += t * t;
    }
    return s;
  }
  for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
  return -s;
}

struct Hit {
  std::uint32_t id;
  float dist;
};

// Full scan + full sort, ties to lower id.
inline std::vector<Hit> naive_knn(const std::vector<float>& base, const float* q, std::size_t d,
                                  std::size_t k, hbfsim::Metric m) {
  const std::size_t n = base.size() / d;
  std::vector<Hit> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = {static_cast<std::uint32_t>(i), naive_distance(base.data() + i * d, q, d, m)};
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  all.resize(std::min(k, n));
  return all;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hbfsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
