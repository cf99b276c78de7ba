#include "hbfsim/ivfpq.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <numeric>

#include <fmt/core.h>

#include "hbfsim/distance.hpp"
#include "hbfsim/errors.hpp"
#include "hbfsim/kmeans.hpp"
#include "hbfsim/parallel.hpp"
#include "hbfsim/rng.hpp"

namespace hbfsim {

namespace {

// Deterministic subset of [0, n) of the given size, ascending.
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  if (size >= n) return rows;
  Rng rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(rows[i], rows[j]);
  }
  rows.resize(size);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::uint32_t assign_list(const CoarseQuantizer& coarse, Metric metric,
                          std::span<const float> x) {
  std::uint32_t best = 0;
  float best_dist = std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < coarse.nlist; ++c) {
    const float d = metric_distance(metric, x, coarse.centroid(c));
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

void residual_of(std::span<const float> x, std::span<const float> centroid,
                 std::span<float> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - centroid[i];
}

}  // namespace

PqCodebook::PqCodebook(std::size_t dim, std::size_t m, std::vector<float> tables)
    : dim_(dim), m_(m), tables_(std::move(tables)) {
  if (m == 0 || dim == 0 || dim % m != 0) {
    throw ArgumentError(fmt::format("m = {} must divide dim = {}", m, dim));
  }
  sub_dim_ = dim / m;
  if (tables_.size() != m * kPqCentroids * sub_dim_) {
    throw ArgumentError("codebook table size does not match m x 256 x sub_dim");
  }
}

void PqCodebook::encode(std::span<const float> vec, std::span<std::uint8_t> code) const {
  if (vec.size() != dim_) {
    throw ArgumentError(fmt::format("encode: vector dim {} != codebook dim {}", vec.size(), dim_));
  }
  if (code.size() != m_) throw ArgumentError("encode: code buffer must hold m bytes");
  for (std::size_t j = 0; j < m_; ++j) {
    const auto sub = vec.subspan(j * sub_dim_, sub_dim_);
    std::size_t best = 0;
    float best_dist = std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < kPqCentroids; ++c) {
      const float d = squared_l2(sub, codeword(j, c));
      if (d < best_dist) {
        best_dist = d;
        best = c;
      }
    }
    code[j] = static_cast<std::uint8_t>(best);
  }
}

std::vector<std::uint8_t> PqCodebook::encode(std::span<const float> vec) const {
  std::vector<std::uint8_t> code(m_);
  encode(vec, code);
  return code;
}

void PqCodebook::decode(std::span<const std::uint8_t> code, std::span<float> out) const {
  if (code.size() != m_ || out.size() != dim_) throw ArgumentError("decode: size mismatch");
  for (std::size_t j = 0; j < m_; ++j) {
    const auto cw = codeword(j, code[j]);
    std::copy(cw.begin(), cw.end(), out.begin() + static_cast<std::ptrdiff_t>(j * sub_dim_));
  }
}

std::vector<float> PqCodebook::decode(std::span<const std::uint8_t> code) const {
  std::vector<float> out(dim_);
  decode(code, out);
  return out;
}

AdcTable build_adc_table(const PqCodebook& codebook, Metric metric, std::span<const float> query,
                         std::optional<std::span<const float>> list_centroid) {
  if (query.size() != codebook.dim()) {
    throw ArgumentError(fmt::format("query dim {} != codebook dim {}", query.size(),
                                    codebook.dim()));
  }
  if (list_centroid && list_centroid->size() != codebook.dim()) {
    throw ArgumentError("list centroid has wrong dimension");
  }
  const std::size_t m = codebook.m();
  const std::size_t sub = codebook.sub_dim();
  AdcTable adc;
  adc.m = m;
  adc.table.resize(m * kPqCentroids);
  if (metric == Metric::L2) {
    std::vector<float> target(query.begin(), query.end());
    if (list_centroid) residual_of(query, *list_centroid, target);
    const std::span<const float> t(target);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < kPqCentroids; ++c) {
        adc.table[j * kPqCentroids + c] = squared_l2(t.subspan(j * sub, sub), codebook.codeword(j, c));
      }
    }
  } else {
    adc.bias = list_centroid ? negated_dot(query, *list_centroid) : 0.0f;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < kPqCentroids; ++c) {
        adc.table[j * kPqCentroids + c] = negated_dot(query.subspan(j * sub, sub), codebook.codeword(j, c));
      }
    }
  }
  return adc;
}

std::size_t IvfPqIndex::size() const {
  std::size_t total = 0;
  for (const auto& l : lists) total += l.size();
  return total;
}

IvfPqIndex build_index(const VectorDataset& data, const BuildParams& params) {
  const std::size_t n = data.count();
  const std::size_t dim = data.dim();
  if (n == 0) throw ArgumentError("cannot build an index over an empty dataset");
  if (params.m == 0 || dim % params.m != 0) {
    throw ArgumentError(fmt::format("m = {} does not divide dim = {}", params.m, dim));
  }
  if (params.nlist == 0 || params.nlist > n) {
    throw ArgumentError(fmt::format("nlist = {} must be in [1, {}]", params.nlist, n));
  }
  const FloatRows rows(data);

  IvfPqIndex index;
  index.metric = params.metric;
  index.residual = params.residual;

  // Coarse quantizer.
  const auto coarse_rows = sample_rows(
      n, std::max(params.nlist, params.nlist * params.max_points_per_centroid),
      derive_seed(params.seed, 10));
  std::vector<float> coarse_train;
  coarse_train.reserve(coarse_rows.size() * dim);
  for (std::size_t r : coarse_rows) {
    const auto x = rows.row(r);
    coarse_train.insert(coarse_train.end(), x.begin(), x.end());
  }
  auto coarse = train_kmeans(coarse_train, dim,
                             {params.nlist, params.kmeans_iters, derive_seed(params.seed, 11),
                              params.threads});
  index.coarse = {params.nlist, dim, std::move(coarse.centroids)};

  std::vector<std::uint32_t> list_of(n);
  parallel_for(n, params.threads, [&](std::size_t i) {
    list_of[i] = assign_list(index.coarse, params.metric, rows.row(i));
  });

  // PQ codebooks on (residual) vectors.
  const auto pq_rows = sample_rows(n, params.max_pq_train_points, derive_seed(params.seed, 12));
  const std::size_t m = params.m;
  const std::size_t sub = dim / m;
  std::vector<float> residual(dim);
  std::vector<float> pq_train(pq_rows.size() * dim);
  for (std::size_t t = 0; t < pq_rows.size(); ++t) {
    const auto x = rows.row(pq_rows[t]);
    std::span<float> out(pq_train.data() + t * dim, dim);
    if (params.residual) {
      residual_of(x, index.coarse.centroid(list_of[pq_rows[t]]), out);
    } else {
      std::copy(x.begin(), x.end(), out.begin());
    }
  }
  const std::size_t ksub_eff = std::min(kPqCentroids, pq_rows.size());
  std::vector<float> tables(m * kPqCentroids * sub);
  std::vector<float> sub_train(pq_rows.size() * sub);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t t = 0; t < pq_rows.size(); ++t) {
      std::copy_n(pq_train.begin() + static_cast<std::ptrdiff_t>(t * dim + j * sub), sub,
                  sub_train.begin() + static_cast<std::ptrdiff_t>(t * sub));
    }
    const auto km = train_kmeans(sub_train, sub,
                                 {ksub_eff, params.kmeans_iters,
                                  derive_seed(params.seed, 100 + j), params.threads});
    // Fewer training points than codewords: repeat the trained ones.
    for (std::size_t c = 0; c < kPqCentroids; ++c) {
      std::copy_n(km.centroids.begin() + static_cast<std::ptrdiff_t>((c % ksub_eff) * sub), sub,
                  tables.begin() + static_cast<std::ptrdiff_t>((j * kPqCentroids + c) * sub));
    }
  }
  index.codebook = PqCodebook(dim, m, std::move(tables));

  // Encode into inverted lists.
  std::vector<std::uint8_t> codes(n * m);
  parallel_for(n, params.threads, [&](std::size_t i) {
    std::vector<float> r(dim);
    const auto x = rows.row(i);
    if (params.residual) {
      residual_of(x, index.coarse.centroid(list_of[i]), r);
    } else {
      std::copy(x.begin(), x.end(), r.begin());
    }
    index.codebook.encode(r, std::span<std::uint8_t>(codes.data() + i * m, m));
  });
  index.lists.resize(params.nlist);
  for (std::size_t l = 0; l < params.nlist; ++l) index.lists[l].list_id = static_cast<std::uint32_t>(l);
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = index.lists[list_of[i]];
    list.ids.push_back(static_cast<VectorId>(data.id_base() + i));
    list.codes.insert(list.codes.end(), codes.begin() + static_cast<std::ptrdiff_t>(i * m),
                      codes.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
  }
  return index;
}

std::size_t QueryTrace::scanned_codes() const {
  std::size_t total = 0;
  for (const auto& [list, count] : scanned) total += count;
  return total;
}

std::size_t CandidateTrace::total_candidates() const {
  std::size_t total = 0;
  for (const auto& q : queries) total += q.candidates.size();
  return total;
}

std::size_t CandidateTrace::total_scanned_codes() const {
  std::size_t total = 0;
  for (const auto& q : queries) total += q.scanned_codes();
  return total;
}

CandidateTrace CandidateTrace::window(std::size_t begin, std::size_t count) const {
  if (queries.empty() && count > 0) throw ArgumentError("cannot window an empty trace");
  CandidateTrace out;
  out.queries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.queries.push_back(queries[(begin + i) % queries.size()]);
  return out;
}

std::vector<Candidate> exact_rerank(std::span<const VectorId> candidates,
                                    std::span<const float> query, const VectorDataset& base,
                                    Metric metric, std::size_t k) {
  if (query.size() != base.dim()) {
    throw ArgumentError(fmt::format("query dim {} != base dim {}", query.size(), base.dim()));
  }
  std::vector<Candidate> exact;
  exact.reserve(candidates.size());
  std::vector<float> widened(base.dim());
  const bool is_float = base.kind() == ElementKind::Float32;
  for (VectorId id : candidates) {
    if (id < base.id_base() || id - base.id_base() >= base.count()) {
      throw ArgumentError(fmt::format("candidate id {} outside base range", id));
    }
    const std::size_t row = id - base.id_base();
    std::span<const float> x;
    if (is_float) {
      x = base.floats().subspan(row * base.dim(), base.dim());
    } else {
      base.row(row, widened);
      x = widened;
    }
    exact.push_back({id, metric_distance(metric, query, x)});
  }
  std::sort(exact.begin(), exact.end());
  if (exact.size() > k) exact.resize(k);
  return exact;
}

std::vector<Candidate> search(const IvfPqIndex& index, std::span<const float> query,
                              const SearchParams& params, const VectorDataset* base,
                              QueryTrace* trace) {
  if (query.size() != index.dim()) {
    throw ArgumentError(fmt::format("query dim {} != index dim {}", query.size(), index.dim()));
  }
  if (params.k == 0) throw ArgumentError("k must be >= 1");
  if (params.nprobe == 0 || params.nprobe > index.nlist()) {
    throw ArgumentError(fmt::format("nprobe = {} must be in [1, {}]", params.nprobe, index.nlist()));
  }
  if (params.rerank) {
    if (base == nullptr) throw ArgumentError("rerank requested without base vectors");
    if (params.nrerank < params.k) {
      throw ArgumentError(fmt::format("nrerank = {} < k = {}", params.nrerank, params.k));
    }
  }

  // Step 1: exact scan over every coarse centroid.
  std::vector<Candidate> lists(index.nlist());
  for (std::size_t c = 0; c < index.nlist(); ++c) {
    lists[c] = {static_cast<VectorId>(c), metric_distance(index.metric, query, index.coarse.centroid(c))};
  }
  std::partial_sort(lists.begin(), lists.begin() + static_cast<std::ptrdiff_t>(params.nprobe),
                    lists.end());

  // Step 2: ADC scan into a bounded max-heap; overflow evicts the worst.
  const std::size_t capacity = params.rerank ? params.nrerank : params.k;
  const std::size_t m = index.codebook.m();
  std::vector<Candidate> heap;
  heap.reserve(capacity + 1);
  if (trace != nullptr) trace->scanned.clear();
  for (std::size_t p = 0; p < params.nprobe; ++p) {
    const auto& list = index.lists[lists[p].id];
    if (trace != nullptr) {
      trace->scanned.emplace_back(list.list_id, static_cast<std::uint32_t>(list.size()));
    }
    if (list.size() == 0) continue;
    std::optional<std::span<const float>> centroid;
    if (index.residual) centroid = index.coarse.centroid(list.list_id);
    const AdcTable adc = build_adc_table(index.codebook, index.metric, query, centroid);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Candidate cand{list.ids[i], adc.lookup_sum({list.codes.data() + i * m, m})};
      if (heap.size() < capacity) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  if (trace != nullptr) {
    trace->candidates.clear();
    for (const auto& c : heap) trace->candidates.push_back(c.id);
  }

  // Step 3: exact rerank.
  std::vector<VectorId> ids;
  if (!params.rerank) {
    if (heap.size() > params.k) heap.resize(params.k);
    return heap;
  }
  ids.reserve(heap.size());
  for (const auto& c : heap) ids.push_back(c.id);
  return exact_rerank(ids, query, *base, index.metric, params.k);
}

std::vector<std::vector<VectorId>> BatchResult::ids() const {
  std::vector<std::vector<VectorId>> out(results.size());
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (const auto& c : results[q]) out[q].push_back(c.id);
  }
  return out;
}

BatchResult search_batch(const IvfPqIndex& index, const VectorDataset& queries,
                         const SearchParams& params, const VectorDataset* base,
                         std::size_t threads) {
  if (queries.count() > 0 && queries.dim() != index.dim()) {
    throw ArgumentError(fmt::format("query dim {} != index dim {}", queries.dim(), index.dim()));
  }
  const FloatRows rows(queries);
  BatchResult out;
  out.results.resize(queries.count());
  out.trace.queries.resize(queries.count());
  parallel_for(queries.count(), threads, [&](std::size_t q) {
    out.results[q] = search(index, rows.row(q), params, base, &out.trace.queries[q]);
  });
  return out;
}

bool operator==(const IvfPqIndex& a, const IvfPqIndex& b) {
  return a.metric == b.metric && a.residual == b.residual && a.coarse.nlist == b.coarse.nlist &&
         a.coarse.dim == b.coarse.dim && a.coarse.centroids == b.coarse.centroids &&
         a.codebook == b.codebook && a.lists == b.lists;
}

}  // namespace hbfsim

namespace hbfsim {

namespace {

constexpr char kIndexMagic[8] = {'H', 'B', 'F', 'I', 'V', 'F', 'P', 'Q'};
constexpr std::uint32_t kIndexVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_array(std::span<const T> values) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }
  void put_raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  template <typename T>
  T get() {
    T v{};
    take(&v, sizeof(T));
    return v;
  }
  template <typename T>
  std::vector<T> get_array(std::size_t n) {
    if (n > (bytes_.size() - offset_) / sizeof(T)) {
      throw FormatError(fmt::format("'{}': truncated at byte {}", name_, offset_));
    }
    std::vector<T> out(n);
    take(out.data(), n * sizeof(T));
    return out;
  }
  void take(void* dst, std::size_t n) {
    if (bytes_.size() - offset_ < n) {
      throw FormatError(fmt::format("'{}': truncated at byte {}", name_, offset_));
    }
    std::memcpy(dst, bytes_.data() + offset_, n);
    offset_ += n;
  }
  bool done() const { return offset_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::string name_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_index(const IvfPqIndex& index, const std::filesystem::path& path) {
  ByteWriter w;
  w.put_raw(kIndexMagic, sizeof(kIndexMagic));
  w.put<std::uint32_t>(kIndexVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.metric));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.nlist()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.codebook.m()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.codebook.ksub()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.dim()));
  w.put<std::uint32_t>(index.residual ? 1u : 0u);
  w.put_array<float>(index.coarse.centroids);
  w.put_array<float>(index.codebook.tables());
  for (const auto& list : index.lists) {
    w.put<std::uint64_t>(list.size());
    w.put_array<VectorId>(list.ids);
    w.put_array<std::uint8_t>(list.codes);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw FormatError(fmt::format("short write to '{}'", path.string()));
}

IvfPqIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  ByteReader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()},
               path.string());
  char magic[sizeof(kIndexMagic)];
  r.take(magic, sizeof(magic));
  if (std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw FormatError(fmt::format("'{}': not an index file", path.string()));
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kIndexVersion) {
    throw FormatError(fmt::format("'{}': unsupported index version {}", path.string(), version));
  }
  const auto metric = r.get<std::uint32_t>();
  const auto nlist = r.get<std::uint32_t>();
  const auto m = r.get<std::uint32_t>();
  const auto ksub = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  const auto residual = r.get<std::uint32_t>();
  if (metric > 1 || residual > 1 || ksub != kPqCentroids || nlist == 0 || m == 0 || dim == 0 ||
      dim % m != 0) {
    throw FormatError(fmt::format("'{}': corrupt index header", path.string()));
  }
  IvfPqIndex index;
  index.metric = static_cast<Metric>(metric);
  index.residual = residual == 1;
  index.coarse = {nlist, dim, r.get_array<float>(std::size_t{nlist} * dim)};
  index.codebook = PqCodebook(dim, m, r.get_array<float>(std::size_t{m} * kPqCentroids * (dim / m)));
  index.lists.resize(nlist);
  for (std::uint32_t l = 0; l < nlist; ++l) {
    auto& list = index.lists[l];
    list.list_id = l;
    const auto n = r.get<std::uint64_t>();
    list.ids = r.get_array<VectorId>(n);
    list.codes = r.get_array<std::uint8_t>(n * m);
  }
  if (!r.done()) throw FormatError(fmt::format("'{}': trailing bytes", path.string()));
  return index;
}

}  // namespace hbfsim
