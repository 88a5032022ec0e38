#pragma once

// Dense vector representations: pooling, resource aggregation, cosine
// similarity, a deterministic hashing embedder and the binary store format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedrank/corpus.hpp"

namespace fedrank::embedding {

// Computation-precision vector. Stores keep 32-bit floats (the on-disk
// precision) and widen on access.
using EmbeddingVector = std::vector<double>;

inline constexpr std::size_t kDefaultDim = 768;

enum class StoreKind : std::uint8_t { query, document, resource };

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim, StoreKind kind = StoreKind::document);

  std::size_t dim() const { return dim_; }
  StoreKind kind() const { return kind_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  // Throws ValidationError on a duplicate id or wrong length and
  // NumericError on non-finite entries.
  void add(const std::string& id, std::span<const double> values);
  void add(const std::string& id, std::span<const float> values);

  bool contains(const std::string& id) const { return index_.contains(id); }
  // Throws ValidationError for unknown ids.
  EmbeddingVector get(const std::string& id) const;
  std::span<const float> raw(const std::string& id) const;
  std::span<const float> raw_at(std::size_t position) const;

  // Ids in insertion order; this is also the on-disk order.
  const std::vector<std::string>& ids() const { return ids_; }

  // Bitwise comparison of dim, ids, order and payload; kind is not stored on
  // disk and is ignored.
  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

 private:
  std::size_t dim_;
  StoreKind kind_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

// Componentwise arithmetic mean. Throws on an empty list or mixed dims.
EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors);

struct ResourceEmbedding {
  std::string resource_id;
  EmbeddingVector vector;
  std::vector<std::string> contributing_doc_ids;
  // Set when no judged document represents the resource; vector is zero.
  bool empty = false;
};

// Mean of the given document vectors, or the zero vector of length `dim`
// (flagged empty) when the list is empty.
ResourceEmbedding aggregate_resource(const std::string& resource_id,
                                     std::span<const EmbeddingVector> doc_vectors,
                                     std::vector<std::string> contributing_doc_ids,
                                     std::size_t dim);

// Looks the selected documents up in `doc_store` and aggregates them.
ResourceEmbedding aggregate_resource(const std::string& resource_id,
                                     const std::vector<std::string>& doc_ids,
                                     const EmbeddingStore& doc_store);

struct ResourceStoreBuild {
  EmbeddingStore store;
  std::vector<ResourceEmbedding> resources;  // ascending resource_id
  std::vector<std::string> empty_resources;
};

ResourceStoreBuild build_resource_store(const corpus::TopDocuments& top,
                                        const EmbeddingStore& doc_store);

// dot(a,b)/(|a||b|) clamped to [-1, 1]; 0 when either norm is zero.
// Throws NumericError on non-finite entries.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

// Lowercased alphanumeric tokens (bytes >= 0x80 count as word characters).
std::vector<std::string> tokenize(std::string_view text);

// Feature-hashing embedder: every token adds 1 to a seed-dependent bucket,
// and the bucket counts are L2-normalized. Empty text gives the zero vector.
EmbeddingVector synth_embed(std::string_view text, std::size_t dim,
                            std::uint64_t seed);

// Binary store file:
//   "FEDEMB1\n" | u32 dim | u32 count |
//   count x ( u16 id length | id bytes | dim x f32 )
// all little-endian.
std::vector<std::uint8_t> encode_store(const EmbeddingStore& store);
EmbeddingStore decode_store(std::span<const std::uint8_t> bytes,
                            StoreKind kind = StoreKind::document);
void write_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore read_store(const std::filesystem::path& path,
                          StoreKind kind = StoreKind::document);

// Debug format: `id<TAB>comma-separated floats`, one entry per line.
std::string encode_store_tsv(const EmbeddingStore& store);
EmbeddingStore decode_store_tsv(std::string_view text,
                                StoreKind kind = StoreKind::document);

}  // namespace fedrank::embedding
