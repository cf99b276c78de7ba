#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hbfsim/dataset.hpp"
#include "hbfsim/types.hpp"

namespace hbfsim {

inline constexpr std::size_t kPqCentroids = 256;  // one byte per sub-code

struct CoarseQuantizer {
  std::size_t nlist = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;  // nlist x dim

  std::span<const float> centroid(std::size_t list) const {
    return {centroids.data() + list * dim, dim};
  }
};

// m sub-quantizers of 256 codewords each over dim/m wide sub-spaces.
class PqCodebook {
 public:
  PqCodebook() = default;
  PqCodebook(std::size_t dim, std::size_t m, std::vector<float> tables);

  std::size_t dim() const { return dim_; }
  std::size_t m() const { return m_; }
  std::size_t ksub() const { return kPqCentroids; }
  std::size_t sub_dim() const { return sub_dim_; }
  std::size_t code_bytes() const { return m_; }
  std::span<const float> tables() const { return tables_; }

  std::span<const float> codeword(std::size_t sub, std::size_t c) const {
    return {tables_.data() + (sub * kPqCentroids + c) * sub_dim_, sub_dim_};
  }

  // code[j] = argmin_c |vec_j - codeword(j, c)|^2, ties to lower c.
  void encode(std::span<const float> vec, std::span<std::uint8_t> code) const;
  std::vector<std::uint8_t> encode(std::span<const float> vec) const;
  void decode(std::span<const std::uint8_t> code, std::span<float> out) const;
  std::vector<float> decode(std::span<const std::uint8_t> code) const;

  friend bool operator==(const PqCodebook&, const PqCodebook&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t m_ = 0;
  std::size_t sub_dim_ = 0;
  std::vector<float> tables_;  // m x 256 x sub_dim
};

// Per-(query, list) lookup table for asymmetric distance computation.
struct AdcTable {
  std::size_t m = 0;
  float bias = 0.0f;          // added before the lookups (inner-product centroid term)
  std::vector<float> table;   // m x 256

  float lookup_sum(std::span<const std::uint8_t> code) const {
    float sum = bias;
    for (std::size_t j = 0; j < m; ++j) sum += table[j * kPqCentroids + code[j]];
    return sum;
  }
};

// L2: table[j][c] = |(q - centroid)_j - codeword(j,c)|^2 (centroid omitted when
// absent). Inner product: table[j][c] = -<q_j, codeword(j,c)> and bias =
// -<q, centroid>, which is exact for residual codes.
AdcTable build_adc_table(const PqCodebook& codebook, Metric metric, std::span<const float> query,
                         std::optional<std::span<const float>> list_centroid);

struct InvertedList {
  std::uint32_t list_id = 0;
  std::vector<VectorId> ids;
  std::vector<std::uint8_t> codes;  // ids.size() x m

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const InvertedList&, const InvertedList&) = default;
};

struct IvfPqIndex {
  Metric metric = Metric::L2;
  bool residual = true;
  CoarseQuantizer coarse;
  PqCodebook codebook;
  std::vector<InvertedList> lists;

  std::size_t dim() const { return coarse.dim; }
  std::size_t nlist() const { return coarse.nlist; }
  std::size_t size() const;
};

struct BuildParams {
  std::size_t nlist = 1;
  std::size_t m = 16;
  std::uint64_t seed = 0;
  bool residual = true;
  Metric metric = Metric::L2;
  std::size_t kmeans_iters = 25;
  // Training-set caps (per coarse centroid, and absolute for PQ).
  std::size_t max_points_per_centroid = 64;
  std::size_t max_pq_train_points = 32768;
  std::size_t threads = 1;
};

IvfPqIndex build_index(const VectorDataset& data, const BuildParams& params);

struct SearchParams {
  std::size_t nprobe = 1;
  std::size_t nrerank = 100;
  std::size_t k = 10;
  bool rerank = true;
};

// What one query touched: lists scanned with their sizes, and the candidate
// ids forwarded to the rerank stage (or the returned top-k without rerank).
struct QueryTrace {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> scanned;  // (list_id, count)
  std::vector<VectorId> candidates;

  std::size_t scanned_codes() const;
};

struct CandidateTrace {
  std::vector<QueryTrace> queries;

  std::size_t total_candidates() const;
  std::size_t total_scanned_codes() const;
  // Queries [begin, begin + count) taken cyclically.
  CandidateTrace window(std::size_t begin, std::size_t count) const;
};

std::vector<Candidate> search(const IvfPqIndex& index, std::span<const float> query,
                              const SearchParams& params, const VectorDataset* base,
                              QueryTrace* trace = nullptr);

struct BatchResult {
  std::vector<std::vector<Candidate>> results;
  CandidateTrace trace;

  std::vector<std::vector<VectorId>> ids() const;
};

BatchResult search_batch(const IvfPqIndex& index, const VectorDataset& queries,
                         const SearchParams& params, const VectorDataset* base,
                         std::size_t threads = 1);

// Step 3 on its own: exact distances for the candidates, top-k ascending.
std::vector<Candidate> exact_rerank(std::span<const VectorId> candidates,
                                    std::span<const float> query, const VectorDataset& base,
                                    Metric metric, std::size_t k);

// Single versioned little-endian file: header, centroids, codebook, lists.
void save_index(const IvfPqIndex& index, const std::filesystem::path& path);
IvfPqIndex load_index(const std::filesystem::path& path);

bool operator==(const IvfPqIndex& a, const IvfPqIndex& b);

}  // namespace hbfsim
