#include "ragscrape/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <string>

#include "ragscrape/crc32c.hpp"
#include "ragscrape/error.hpp"

namespace ragscrape {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'S', 'X'};

double squared_sum(const std::vector<float>& v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return sum;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

double cosine_with_norms(const std::vector<float>& a, double norm_a,
                         const std::vector<float>& b, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (norm_a * norm_b), -1.0, 1.0);
}

void check_embedding(const EmbeddingVector& v) {
  for (float x : v.values) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidConfig, "embedding contains a non-finite value");
  }
}

class Writer {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kCorruptIndex, "unexpected end of index data");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.dims()) + " vs " + std::to_string(b.dims()));
  }
  return cosine_with_norms(a.values, std::sqrt(squared_sum(a.values)), b.values,
                           std::sqrt(squared_sum(b.values)));
}

VectorStore::VectorStore(const VectorStore& other) {
  std::shared_lock lock(other.mu_);
  dims_ = other.dims_;
  next_id_ = other.next_id_;
  records_ = other.records_;
  norms_ = other.norms_;
}

VectorStore::VectorStore(VectorStore&& other) noexcept {
  std::unique_lock lock(other.mu_);
  dims_ = other.dims_;
  next_id_ = other.next_id_;
  records_ = std::move(other.records_);
  norms_ = std::move(other.norms_);
}

VectorStore& VectorStore::operator=(VectorStore other) noexcept {
  std::unique_lock lock(mu_);
  dims_ = other.dims_;
  next_id_ = other.next_id_;
  records_ = std::move(other.records_);
  norms_ = std::move(other.norms_);
  return *this;
}

RecordId VectorStore::add(Chunk chunk, EmbeddingVector embedding) {
  check_embedding(embedding);
  std::unique_lock lock(mu_);
  if (records_.empty() && dims_ == 0) {
    if (embedding.dims() == 0) throw Error(ErrorCode::kDimensionMismatch, "zero-dimensional embedding");
    dims_ = embedding.dims();
  } else if (embedding.dims() != dims_) {
    throw Error(ErrorCode::kDimensionMismatch, "record has " + std::to_string(embedding.dims()) +
                                                   " dims, index has " + std::to_string(dims_));
  }
  const RecordId id = next_id_++;
  norms_.push_back(std::sqrt(squared_sum(embedding.values)));
  records_.push_back(DocumentRecord{id, std::move(chunk), std::move(embedding)});
  return id;
}

std::vector<SearchHit> VectorStore::search(const EmbeddingVector& query, std::size_t k) const {
  return search(query, k, Filter{});
}

std::vector<SearchHit> VectorStore::search(const EmbeddingVector& query, std::size_t k,
                                           const Filter& filter) const {
  std::shared_lock lock(mu_);
  if (records_.empty() || k == 0) return {};
  if (query.dims() != dims_) {
    throw Error(ErrorCode::kDimensionMismatch, "query has " + std::to_string(query.dims()) +
                                                   " dims, index has " + std::to_string(dims_));
  }
  const double query_norm = std::sqrt(squared_sum(query.values));

  struct Scored {
    double score;
    std::size_t index;
  };
  std::vector<Scored> scored;
  scored.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (filter && !filter(records_[i])) continue;
    scored.push_back({cosine_with_norms(query.values, query_norm, records_[i].embedding.values, norms_[i]), i});
  }
  // Record index order equals id order, so ties break on index.
  const auto better = [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const DocumentRecord& r = records_[scored[i].index];
    hits.push_back(SearchHit{r.id, scored[i].score, r.chunk});
  }
  return hits;
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::size_t VectorStore::dims() const {
  std::shared_lock lock(mu_);
  return dims_;
}

std::vector<DocumentRecord> VectorStore::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

void VectorStore::save(const std::filesystem::path& path) const {
  Writer w;
  {
    std::shared_lock lock(mu_);
    w.bytes(kMagic, sizeof(kMagic));
    w.u16(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(dims_));
    w.u64(records_.size());
    for (const auto& r : records_) {
      w.u64(r.id);
      for (float x : r.embedding.values) w.f32(x);
      const std::string json = chunk_to_json(r.chunk).dump();
      w.u32(static_cast<std::uint32_t>(json.size()));
      w.bytes(json.data(), json.size());
    }
  }
  w.u32(crc32c(w.buffer()));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(w.buffer().data()),
              static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move index into place: " + ec.message());
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open index " + path.string());
  const std::vector<std::uint8_t> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  constexpr std::size_t kHeader = 4 + 2 + 4 + 8;
  if (data.size() < kHeader + 4) throw Error(ErrorCode::kCorruptIndex, "file too short");
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kCorruptIndex, "bad magic");
  }
  const std::span<const std::uint8_t> body(data.data(), data.size() - 4);
  Reader trailer(std::span<const std::uint8_t>(data.data() + body.size(), 4));
  if (trailer.u32() != crc32c(body)) throw Error(ErrorCode::kCorruptIndex, "checksum mismatch");

  Reader r(body);
  r.string(4);
  if (const auto version = r.u16(); version != kFormatVersion) {
    throw Error(ErrorCode::kCorruptIndex, "unsupported version " + std::to_string(version));
  }
  VectorStore store;
  store.dims_ = r.u32();
  const std::uint64_t count = r.u64();
  if (count > 0 && store.dims_ == 0) throw Error(ErrorCode::kCorruptIndex, "records without dims");
  const std::size_t min_record = 8 + 4 * static_cast<std::size_t>(store.dims_) + 4;
  if (count > body.size() / min_record) throw Error(ErrorCode::kCorruptIndex, "record count exceeds file size");

  store.records_.reserve(count);
  store.norms_.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    DocumentRecord rec;
    rec.id = r.u64();
    if (n > 0 && rec.id <= store.records_.back().id) {
      throw Error(ErrorCode::kCorruptIndex, "record ids not increasing");
    }
    rec.embedding.values.resize(store.dims_);
    for (float& x : rec.embedding.values) {
      x = r.f32();
      if (!std::isfinite(x)) throw Error(ErrorCode::kCorruptIndex, "non-finite embedding value");
    }
    const std::uint32_t len = r.u32();
    const auto json = nlohmann::json::parse(r.string(len), nullptr, false);
    if (json.is_discarded()) throw Error(ErrorCode::kCorruptIndex, "bad chunk JSON");
    try {
      rec.chunk = chunk_from_json(json);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptIndex, std::string("bad chunk record: ") + e.what());
    }
    store.norms_.push_back(std::sqrt(squared_sum(rec.embedding.values)));
    store.records_.push_back(std::move(rec));
  }
  if (!r.done()) throw Error(ErrorCode::kCorruptIndex, "trailing bytes after records");
  store.next_id_ = store.records_.empty() ? 0 : store.records_.back().id + 1;
  return store;
}

}  // namespace ragscrape
