#include "hbfsim/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/core.h>

#include "hbfsim/distance.hpp"
#include "hbfsim/errors.hpp"
#include "hbfsim/parallel.hpp"
#include "hbfsim/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "vecs I/O assumes a little-endian host");

namespace hbfsim {

namespace {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(fmt::format("short write to '{}'", path.string()));
}

// Walks [int32 dim][dim x elem] records, validating structure. Returns dim
// and count; calls sink(record_index, payload_pointer) per record.
template <typename Sink>
std::pair<std::size_t, std::size_t> parse_records(const std::vector<char>& bytes,
                                                  std::size_t elem_size,
                                                  const std::filesystem::path& path,
                                                  Sink&& sink) {
  if (bytes.empty()) return {0, 0};
  std::size_t offset = 0;
  std::size_t dim = 0;
  std::size_t count = 0;
  while (offset < bytes.size()) {
    if (bytes.size() - offset < 4) {
      throw FormatError(fmt::format("'{}': truncated record header at byte {}",
                                    path.string(), offset));
    }
    std::int32_t d = 0;
    std::memcpy(&d, bytes.data() + offset, 4);
    if (d <= 0) {
      throw FormatError(fmt::format("'{}': invalid dimension {} in record {}",
                                    path.string(), d, count));
    }
    if (count == 0) {
      dim = static_cast<std::size_t>(d);
    } else if (static_cast<std::size_t>(d) != dim) {
      throw FormatError(fmt::format("'{}': record {} has dimension {}, expected {}",
                                    path.string(), count, d, dim));
    }
    offset += 4;
    const std::size_t payload = dim * elem_size;
    if (bytes.size() - offset < payload) {
      throw FormatError(fmt::format("'{}': truncated record {}", path.string(), count));
    }
    sink(count, bytes.data() + offset);
    offset += payload;
    ++count;
  }
  return {dim, count};
}

template <typename T>
void append_records(std::vector<char>& out, std::size_t dim, std::size_t count,
                    const T* data) {
  const auto d = static_cast<std::int32_t>(dim);
  out.reserve(out.size() + count * (4 + dim * sizeof(T)));
  for (std::size_t i = 0; i < count; ++i) {
    const char* hdr = reinterpret_cast<const char*>(&d);
    out.insert(out.end(), hdr, hdr + 4);
    const char* row = reinterpret_cast<const char*>(data + i * dim);
    out.insert(out.end(), row, row + dim * sizeof(T));
  }
}

}  // namespace

VectorDataset VectorDataset::from_floats(std::size_t dim, std::vector<float> data,
                                         VectorId id_base) {
  if (dim == 0 && !data.empty()) throw ArgumentError("dim is 0 but data is non-empty");
  if (dim != 0 && data.size() % dim != 0) {
    throw ArgumentError(fmt::format("data length {} not a multiple of dim {}",
                                    data.size(), dim));
  }
  VectorDataset ds;
  ds.dim_ = dim;
  ds.count_ = dim == 0 ? 0 : data.size() / dim;
  ds.id_base_ = id_base;
  ds.data_ = std::move(data);
  return ds;
}

VectorDataset VectorDataset::from_bytes(std::size_t dim, std::vector<std::uint8_t> data,
                                        VectorId id_base) {
  if (dim == 0 && !data.empty()) throw ArgumentError("dim is 0 but data is non-empty");
  if (dim != 0 && data.size() % dim != 0) {
    throw ArgumentError(fmt::format("data length {} not a multiple of dim {}",
                                    data.size(), dim));
  }
  VectorDataset ds;
  ds.dim_ = dim;
  ds.count_ = dim == 0 ? 0 : data.size() / dim;
  ds.id_base_ = id_base;
  ds.data_ = std::move(data);
  return ds;
}

ElementKind VectorDataset::kind() const {
  return std::holds_alternative<std::vector<std::uint8_t>>(data_) ? ElementKind::UInt8
                                                                  : ElementKind::Float32;
}

std::span<const float> VectorDataset::floats() const {
  const auto* v = std::get_if<std::vector<float>>(&data_);
  if (v == nullptr) throw ArgumentError("dataset elements are uint8, not float32");
  return *v;
}

std::span<const std::uint8_t> VectorDataset::bytes() const {
  const auto* v = std::get_if<std::vector<std::uint8_t>>(&data_);
  if (v == nullptr) throw ArgumentError("dataset elements are float32, not uint8");
  return *v;
}

void VectorDataset::row(std::size_t i, std::span<float> out) const {
  if (i >= count_) throw ArgumentError(fmt::format("row {} out of range {}", i, count_));
  if (out.size() != dim_) throw ArgumentError("row buffer has wrong length");
  std::visit(
      [&](const auto& v) {
        for (std::size_t j = 0; j < dim_; ++j) out[j] = static_cast<float>(v[i * dim_ + j]);
      },
      data_);
}

std::vector<float> VectorDataset::row(std::size_t i) const {
  std::vector<float> out(dim_);
  row(i, out);
  return out;
}

std::vector<float> VectorDataset::to_float() const {
  return std::visit(
      [](const auto& v) { return std::vector<float>(v.begin(), v.end()); }, data_);
}

VectorDataset VectorDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > count_) throw ArgumentError("slice out of range");
  const auto base = static_cast<VectorId>(id_base_ + begin);
  return std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        std::vector<T> part(v.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                            v.begin() + static_cast<std::ptrdiff_t>(end * dim_));
        if constexpr (std::is_same_v<T, float>) {
          return from_floats(dim_, std::move(part), base);
        } else {
          return from_bytes(dim_, std::move(part), base);
        }
      },
      data_);
}

FloatRows::FloatRows(const VectorDataset& ds) : dim_(ds.dim()), count_(ds.count()) {
  if (ds.kind() == ElementKind::Float32) {
    base_ = ds.floats().data();
  } else {
    owned_ = ds.to_float();
    base_ = owned_.data();
  }
}

VecsFormat parse_vecs_format(std::string_view name) {
  if (name == "fvecs") return VecsFormat::Fvecs;
  if (name == "bvecs") return VecsFormat::Bvecs;
  if (name == "ivecs") return VecsFormat::Ivecs;
  throw ArgumentError(fmt::format("unknown vector format '{}'", name));
}

VecsFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext.size() < 2) {
    throw ArgumentError(fmt::format("cannot infer format of '{}'", path.string()));
  }
  return parse_vecs_format(ext.substr(1));
}

VectorDataset load_vectors(const std::filesystem::path& path, VecsFormat format) {
  const auto bytes = read_file(path);
  switch (format) {
    case VecsFormat::Fvecs: {
      std::vector<float> data;
      data.reserve(bytes.size() / 4);
      auto [dim, count] = parse_records(bytes, 4, path, [&](std::size_t, const char* p) {
        const std::size_t old = data.size();
        std::int32_t d = 0;
        std::memcpy(&d, p - 4, 4);
        data.resize(old + static_cast<std::size_t>(d));
        std::memcpy(data.data() + old, p, static_cast<std::size_t>(d) * 4);
      });
      (void)count;
      return VectorDataset::from_floats(dim, std::move(data));
    }
    case VecsFormat::Bvecs: {
      std::vector<std::uint8_t> data;
      data.reserve(bytes.size());
      auto [dim, count] = parse_records(bytes, 1, path, [&](std::size_t, const char* p) {
        std::int32_t d = 0;
        std::memcpy(&d, p - 4, 4);
        data.insert(data.end(), reinterpret_cast<const std::uint8_t*>(p),
                    reinterpret_cast<const std::uint8_t*>(p) + d);
      });
      (void)count;
      return VectorDataset::from_bytes(dim, std::move(data));
    }
    case VecsFormat::Ivecs:
      throw ArgumentError("ivecs holds int32 ids; use load_ivecs");
  }
  throw ArgumentError("unknown format");
}

void save_vectors(const VectorDataset& ds, const std::filesystem::path& path,
                  VecsFormat format) {
  std::vector<char> out;
  switch (format) {
    case VecsFormat::Fvecs: {
      const auto rows = ds.to_float();
      append_records(out, ds.dim(), ds.count(), rows.data());
      break;
    }
    case VecsFormat::Bvecs: {
      if (ds.kind() == ElementKind::UInt8) {
        append_records(out, ds.dim(), ds.count(), ds.bytes().data());
      } else {
        std::vector<std::uint8_t> narrow(ds.floats().size());
        for (std::size_t i = 0; i < narrow.size(); ++i) {
          const float v = ds.floats()[i];
          if (!(v >= 0.0f && v <= 255.0f) || std::floor(v) != v) {
            throw ArgumentError(fmt::format(
                "value {} at element {} does not fit uint8; cannot save as bvecs", v, i));
          }
          narrow[i] = static_cast<std::uint8_t>(v);
        }
        append_records(out, ds.dim(), ds.count(), narrow.data());
      }
      break;
    }
    case VecsFormat::Ivecs:
      throw ArgumentError("ivecs holds int32 ids; use save_ivecs");
  }
  write_file(path, out);
}

IntMatrix load_ivecs(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  IntMatrix m;
  auto [dim, count] = parse_records(bytes, 4, path, [&](std::size_t, const char* p) {
    std::int32_t d = 0;
    std::memcpy(&d, p - 4, 4);
    const std::size_t old = m.data.size();
    m.data.resize(old + static_cast<std::size_t>(d));
    std::memcpy(m.data.data() + old, p, static_cast<std::size_t>(d) * 4);
  });
  m.rows = count;
  m.cols = dim;
  return m;
}

void save_ivecs(const IntMatrix& m, const std::filesystem::path& path) {
  if (m.data.size() != m.rows * m.cols) throw ArgumentError("ivecs matrix shape mismatch");
  std::vector<char> out;
  append_records(out, m.cols, m.rows, m.data.data());
  write_file(path, out);
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& ids_path,
                       const std::filesystem::path& dists_path) {
  IntMatrix ids{gt.num_queries, gt.k, {}};
  ids.data.reserve(gt.neighbors.size());
  for (VectorId id : gt.neighbors) ids.data.push_back(static_cast<std::int32_t>(id));
  save_ivecs(ids, ids_path);
  save_vectors(VectorDataset::from_floats(gt.k, gt.distances), dists_path, VecsFormat::Fvecs);
}

GroundTruth load_ground_truth(const std::filesystem::path& ids_path,
                              const std::filesystem::path& dists_path) {
  const IntMatrix ids = load_ivecs(ids_path);
  const VectorDataset dists = load_vectors(dists_path, VecsFormat::Fvecs);
  if (dists.count() != ids.rows || (ids.rows > 0 && dists.dim() != ids.cols)) {
    throw FormatError("ground-truth id and distance files disagree in shape");
  }
  GroundTruth gt;
  gt.k = ids.cols;
  gt.num_queries = ids.rows;
  gt.neighbors.reserve(ids.data.size());
  for (std::int32_t id : ids.data) {
    if (id < 0) throw FormatError("negative id in ground truth");
    gt.neighbors.push_back(static_cast<VectorId>(id));
  }
  const auto f = dists.to_float();
  gt.distances.assign(f.begin(), f.end());
  return gt;
}

VectorDataset generate_synthetic(std::size_t n, std::size_t d, std::uint64_t seed,
                                 const SyntheticDistribution& dist) {
  if (d == 0) throw ArgumentError("dimension must be >= 1");
  std::vector<float> data(n * d);
  if (dist.kind == SyntheticDistribution::Kind::Uniform) {
    Rng rng(seed);
    for (float& v : data) v = static_cast<float>(rng.uniform());
    return VectorDataset::from_floats(d, std::move(data));
  }
  if (dist.clusters == 0) throw ArgumentError("gaussian mixture needs >= 1 cluster");
  Rng center_rng(derive_seed(seed, 0));
  std::vector<double> centers(dist.clusters * d);
  for (double& c : centers) c = center_rng.uniform();
  Rng rng(derive_seed(seed, 1));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.below(dist.clusters);
    for (std::size_t j = 0; j < d; ++j) {
      data[i * d + j] = static_cast<float>(centers[c * d + j] + dist.spread * rng.normal());
    }
  }
  return VectorDataset::from_floats(d, std::move(data));
}

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries,
                            std::size_t k, Metric metric, std::size_t threads) {
  if (k == 0) throw ArgumentError("k must be >= 1");
  if (k > base.count()) {
    throw ArgumentError(fmt::format("k = {} exceeds base count {}", k, base.count()));
  }
  if (queries.count() > 0 && queries.dim() != base.dim()) {
    throw ArgumentError(fmt::format("query dim {} != base dim {}", queries.dim(), base.dim()));
  }
  const FloatRows base_rows(base);
  const FloatRows query_rows(queries);
  GroundTruth gt;
  gt.k = k;
  gt.num_queries = queries.count();
  gt.neighbors.resize(gt.num_queries * k);
  gt.distances.resize(gt.num_queries * k);
  parallel_for(gt.num_queries, threads, [&](std::size_t q) {
    std::vector<Candidate> all(base.count());
    const auto query = query_rows.row(q);
    for (std::size_t i = 0; i < base.count(); ++i) {
      all[i] = {static_cast<VectorId>(base.id_base() + i),
                metric_distance(metric, query, base_rows.row(i))};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    for (std::size_t j = 0; j < k; ++j) {
      gt.neighbors[q * k + j] = all[j].id;
      gt.distances[q * k + j] = all[j].dist;
    }
  });
  return gt;
}

double recall_at_k(std::span<const std::vector<VectorId>> results, const GroundTruth& truth,
                   std::size_t k) {
  if (results.size() != truth.num_queries) {
    throw ArgumentError(fmt::format("{} result rows vs {} ground-truth rows", results.size(),
                                    truth.num_queries));
  }
  if (k == 0 || k > truth.k) {
    throw ArgumentError(fmt::format("k = {} invalid for ground truth with k = {}", k, truth.k));
  }
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    std::vector<VectorId> truth_ids(truth.ids(q).begin(), truth.ids(q).begin() + k);
    std::sort(truth_ids.begin(), truth_ids.end());
    // A short result list (too few codes scanned) counts the gap as misses.
    const std::size_t take = std::min(k, results[q].size());
    std::vector<VectorId> got(results[q].begin(), results[q].begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(got.begin(), got.end());
    got.erase(std::unique(got.begin(), got.end()), got.end());
    std::size_t hits = 0;
    for (VectorId id : got) hits += std::binary_search(truth_ids.begin(), truth_ids.end(), id);
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(results.size());
}

}  // namespace hbfsim
