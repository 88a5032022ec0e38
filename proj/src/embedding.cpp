#include "fedrank/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <string_view>

#include "fedrank/binary_io.hpp"
#include "fedrank/error.hpp"
#include "fedrank/random.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::embedding {

namespace {

constexpr std::string_view kStoreMagic = "FEDEMB1\n";

template <typename T>
void require_finite(std::span<const T> values, const std::string& what) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite entry in " + what);
  }
}

}  // namespace

// ---- EmbeddingStore -------------------------------------------------------

EmbeddingStore::EmbeddingStore(std::size_t dim, StoreKind kind)
    : dim_(dim), kind_(kind) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingStore::add(const std::string& id, std::span<const double> values) {
  std::vector<float> narrowed(values.begin(), values.end());
  require_finite(values, "embedding " + id);
  add(id, std::span<const float>(narrowed));
}

void EmbeddingStore::add(const std::string& id, std::span<const float> values) {
  if (values.size() != dim_) {
    throw ValidationError("embedding " + id + " has dim " +
                          std::to_string(values.size()) + ", store dim is " +
                          std::to_string(dim_));
  }
  require_finite(values, "embedding " + id);
  if (!index_.emplace(id, ids_.size()).second) {
    throw ValidationError("duplicate embedding id " + id);
  }
  ids_.push_back(id);
  data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const float> EmbeddingStore::raw_at(std::size_t position) const {
  return std::span<const float>(data_).subspan(position * dim_, dim_);
}

std::span<const float> EmbeddingStore::raw(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("no embedding for id " + id);
  return raw_at(it->second);
}

EmbeddingVector EmbeddingStore::get(const std::string& id) const {
  auto r = raw(id);
  return EmbeddingVector(r.begin(), r.end());
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  if (a.dim_ != b.dim_ || a.ids_ != b.ids_ || a.data_.size() != b.data_.size()) {
    return false;
  }
  return std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(float)) == 0;
}

// ---- pooling --------------------------------------------------------------

EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw UsageError("mean_pool of an empty list");
  const std::size_t dim = vectors.front().size();
  EmbeddingVector out(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ValidationError("mean_pool over mixed dimensions");
    for (std::size_t i = 0; i < dim; ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& x : out) x /= n;
  return out;
}

ResourceEmbedding aggregate_resource(const std::string& resource_id,
                                     std::span<const EmbeddingVector> doc_vectors,
                                     std::vector<std::string> contributing_doc_ids,
                                     std::size_t dim) {
  ResourceEmbedding out;
  out.resource_id = resource_id;
  out.contributing_doc_ids = std::move(contributing_doc_ids);
  if (doc_vectors.empty()) {
    out.vector.assign(dim, 0.0);
    out.empty = true;
    return out;
  }
  for (const auto& v : doc_vectors) {
    if (v.size() != dim) {
      throw ValidationError("document vector dim mismatch for resource " +
                            resource_id);
    }
  }
  out.vector = mean_pool(doc_vectors);
  return out;
}

ResourceEmbedding aggregate_resource(const std::string& resource_id,
                                     const std::vector<std::string>& doc_ids,
                                     const EmbeddingStore& doc_store) {
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(doc_ids.size());
  for (const auto& d : doc_ids) vectors.push_back(doc_store.get(d));
  return aggregate_resource(resource_id, vectors, doc_ids, doc_store.dim());
}

ResourceStoreBuild build_resource_store(const corpus::TopDocuments& top,
                                        const EmbeddingStore& doc_store) {
  ResourceStoreBuild out{EmbeddingStore(doc_store.dim(), StoreKind::resource), {}, {}};
  for (const auto& [rid, docs] : top.per_resource) {
    auto res = aggregate_resource(rid, docs, doc_store);
    out.store.add(rid, std::span<const double>(res.vector));
    if (res.empty) out.empty_resources.push_back(rid);
    out.resources.push_back(std::move(res));
  }
  return out;
}

// ---- cosine ---------------------------------------------------------------

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ValidationError("cosine over vectors of different dimension");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw NumericError("cosine of a non-finite vector");
    }
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

// ---- synthetic embedder ---------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) {
      current.push_back(static_cast<char>(u < 0x80 ? std::tolower(u) : u));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

EmbeddingVector synth_embed(std::string_view text, std::size_t dim,
                            std::uint64_t seed) {
  if (dim == 0) throw UsageError("synth_embed dim must be positive");
  EmbeddingVector out(dim, 0.0);
  const std::uint64_t basis = splitmix64(seed);
  for (const auto& token : tokenize(text)) {
    out[binio::fnv1a64(token, basis) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : out) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : out) x /= norm;
  }
  return out;
}

// ---- file formats ---------------------------------------------------------

std::vector<std::uint8_t> encode_store(const EmbeddingStore& store) {
  binio::Writer w;
  w.raw(kStoreMagic);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    w.short_string(store.ids()[i]);
    for (float v : store.raw_at(i)) w.f32(v);
  }
  return w.buffer();
}

EmbeddingStore decode_store(std::span<const std::uint8_t> bytes, StoreKind kind) {
  binio::Reader r(bytes);
  if (bytes.size() < kStoreMagic.size() ||
      std::memcmp(bytes.data(), kStoreMagic.data(), kStoreMagic.size()) != 0) {
    throw FormatError("bad magic: not an embedding store");
  }
  r.take(kStoreMagic.size());
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  if (dim == 0) throw FormatError("embedding store declares dim 0");
  const std::size_t min_record = 2 + static_cast<std::size_t>(dim) * 4;
  if (static_cast<std::size_t>(count) * min_record > r.remaining()) {
    throw FormatError("truncated file: " + std::to_string(count) +
                      " records of dim " + std::to_string(dim) +
                      " do not fit in " + std::to_string(r.remaining()) +
                      " bytes");
  }
  EmbeddingStore store(dim, kind);
  std::vector<float> values(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = r.short_string();
    for (auto& v : values) v = r.f32();
    try {
      store.add(id, std::span<const float>(values));
    } catch (const Error& e) {
      throw FormatError(std::string("record ") + std::to_string(i) + ": " + e.what());
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("count mismatch: " + std::to_string(r.remaining()) +
                      " trailing bytes after " + std::to_string(count) +
                      " records");
  }
  return store;
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  binio::write_file(path, encode_store(store));
}

EmbeddingStore read_store(const std::filesystem::path& path, StoreKind kind) {
  auto bytes = binio::read_file(path);
  try {
    return decode_store(bytes, kind);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string encode_store_tsv(const EmbeddingStore& store) {
  std::string out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    out += store.ids()[i];
    out += '\t';
    bool first = true;
    for (float v : store.raw_at(i)) {
      if (!first) out += ',';
      first = false;
      out += text::real(v, "%.9g");
    }
    out += '\n';
  }
  return out;
}

EmbeddingStore decode_store_tsv(std::string_view text_in, StoreKind kind) {
  std::optional<EmbeddingStore> store;
  std::size_t lineno = 0;
  for (auto line : text::split(text_in, '\n')) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError("expected id<TAB>values", lineno);
    }
    std::vector<float> values;
    for (auto tok : text::split(line.substr(tab + 1), ',')) {
      std::string t(text::trim(tok));
      char* end = nullptr;
      const float v = std::strtof(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size()) {
        throw ParseError("bad float '" + t + "'", lineno);
      }
      values.push_back(v);
    }
    if (!store) store.emplace(values.size(), kind);
    try {
      store->add(std::string(line.substr(0, tab)), std::span<const float>(values));
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!store) throw ParseError("empty embedding TSV", 0);
  return std::move(*store);
}

}  // namespace fedrank::embedding
