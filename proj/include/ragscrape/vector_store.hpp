#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <shared_mutex>
#include <vector>

#include "ragscrape/chunker.hpp"
#include "ragscrape/embedder.hpp"

namespace ragscrape {

using RecordId = std::uint64_t;

struct DocumentRecord {
  RecordId id = 0;
  Chunk chunk;
  EmbeddingVector embedding;
};

struct SearchHit {
  RecordId id = 0;
  double score = 0.0;  // cosine, clamped to [-1, 1]
  Chunk chunk;
};

/// dot(a,b) / (|a| |b|), or 0 when either side is all-zero.
/// Throws Error{kDimensionMismatch} if the dimensions differ.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Exact (full-scan) cosine top-k index.
///
/// Ids are assigned from 0 in insertion order. The first insertion fixes the
/// dimensionality. Results are ordered by descending score, then ascending
/// id. Readers share a lock; add/load take it exclusively.
class VectorStore {
 public:
  using Filter = std::function<bool(const DocumentRecord&)>;

  VectorStore() = default;
  VectorStore(const VectorStore& other);
  VectorStore(VectorStore&& other) noexcept;
  VectorStore& operator=(VectorStore other) noexcept;

  RecordId add(Chunk chunk, EmbeddingVector embedding);

  std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const;
  /// As search(), considering only records accepted by `filter`.
  std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k,
                                const Filter& filter) const;

  std::size_t size() const;
  std::size_t dims() const;
  std::vector<DocumentRecord> records() const;

  /// Layout (little-endian): "RGSX", u16 version, u32 dims, u64 count, then
  /// per record u64 id, f32[dims], u32 length + chunk JSON; trailing CRC32C.
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

  static constexpr std::uint16_t kFormatVersion = 1;

 private:
  mutable std::shared_mutex mu_;
  std::size_t dims_ = 0;
  RecordId next_id_ = 0;
  std::vector<DocumentRecord> records_;
  std::vector<double> norms_;
};

}  // namespace ragscrape
