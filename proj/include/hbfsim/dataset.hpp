#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "hbfsim/types.hpp"

namespace hbfsim {

enum class ElementKind : std::uint8_t { UInt8, Float32 };

// Row-major N x D matrix of base vectors or queries. Element storage is either
// uint8 (BIGANN-style bvecs) or float32; distance code always sees floats.
class VectorDataset {
 public:
  VectorDataset() = default;

  static VectorDataset from_floats(std::size_t dim, std::vector<float> data,
                                   VectorId id_base = 0);
  static VectorDataset from_bytes(std::size_t dim, std::vector<std::uint8_t> data,
                                  VectorId id_base = 0);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  ElementKind kind() const;
  VectorId id_base() const { return id_base_; }
  void set_id_base(VectorId base) { id_base_ = base; }

  std::size_t element_bytes() const { return kind() == ElementKind::UInt8 ? 1 : 4; }
  std::size_t vector_bytes() const { return dim_ * element_bytes(); }

  std::span<const float> floats() const;
  std::span<const std::uint8_t> bytes() const;

  // Widened copy of row i.
  void row(std::size_t i, std::span<float> out) const;
  std::vector<float> row(std::size_t i) const;

  // Every element as float32, row-major.
  std::vector<float> to_float() const;

  // Rows [begin, end) as a new dataset; ids continue from id_base + begin.
  VectorDataset slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const VectorDataset&, const VectorDataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  VectorId id_base_ = 0;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data_;
};

// Float rows of a dataset: borrows float32 storage, widens uint8 once.
class FloatRows {
 public:
  explicit FloatRows(const VectorDataset& ds);
  FloatRows(const FloatRows&) = delete;
  FloatRows& operator=(const FloatRows&) = delete;

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }
  std::span<const float> row(std::size_t i) const { return {base_ + i * dim_, dim_}; }
  std::span<const float> all() const { return {base_, count_ * dim_}; }

 private:
  std::vector<float> owned_;
  const float* base_ = nullptr;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
};

// Exact k nearest neighbours per query, ascending distance, ties to lower id.
struct GroundTruth {
  std::size_t k = 0;
  std::size_t num_queries = 0;
  std::vector<VectorId> neighbors;  // num_queries x k
  std::vector<float> distances;     // num_queries x k

  std::span<const VectorId> ids(std::size_t q) const { return {neighbors.data() + q * k, k}; }
  std::span<const float> dists(std::size_t q) const { return {distances.data() + q * k, k}; }
};

enum class VecsFormat { Fvecs, Bvecs, Ivecs };

VecsFormat parse_vecs_format(std::string_view name);
// Infers the format from the file extension.
VecsFormat format_from_path(const std::filesystem::path& path);

// fvecs/bvecs: little-endian records of [int32 dim][dim elements]. An empty
// file loads as {dim 0, count 0}.
VectorDataset load_vectors(const std::filesystem::path& path, VecsFormat format);
void save_vectors(const VectorDataset& ds, const std::filesystem::path& path,
                  VecsFormat format);

// ivecs holds int32 elements; used for ground-truth ids.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> data;
};
IntMatrix load_ivecs(const std::filesystem::path& path);
void save_ivecs(const IntMatrix& m, const std::filesystem::path& path);

// Ground truth is persisted as an ivecs (ids) + fvecs (distances) pair.
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& ids_path,
                       const std::filesystem::path& dists_path);
GroundTruth load_ground_truth(const std::filesystem::path& ids_path,
                              const std::filesystem::path& dists_path);

struct SyntheticDistribution {
  enum class Kind { Uniform, GaussianMixture };
  Kind kind = Kind::Uniform;
  std::size_t clusters = 1;  // gaussian mixture only
  double spread = 0.1;       // per-dimension std-dev around each center

  static SyntheticDistribution uniform() { return {}; }
  static SyntheticDistribution gaussian_mixture(std::size_t c, double spread = 0.1) {
    return {Kind::GaussianMixture, c, spread};
  }
};

// Uniform draws are in [0,1)^d; mixture centers are uniform in [0,1)^d.
VectorDataset generate_synthetic(std::size_t n, std::size_t d, std::uint64_t seed,
                                 const SyntheticDistribution& dist);

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries,
                            std::size_t k, Metric metric, std::size_t threads = 1);

// Mean over queries of |result_top_k ∩ truth_top_k| / k. Result lists shorter
// than k are allowed; the missing entries count as misses.
double recall_at_k(std::span<const std::vector<VectorId>> results, const GroundTruth& truth,
                   std::size_t k);

}  // namespace hbfsim
