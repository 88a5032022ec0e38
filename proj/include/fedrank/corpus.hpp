#pragma once

// Queries, documents, resource membership and graded relevance judgments.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fedrank::corpus {

struct QueryRecord {
  std::string query_id;
  std::string text;
};

struct DocumentRecord {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string resource_id;

  // Title concatenated with body, the text that gets embedded.
  std::string text() const;
};

struct ResourceRecord {
  std::string resource_id;
  std::vector<std::string> doc_ids;  // ascending
};

struct Judgment {
  std::string query_id;
  std::string doc_id;
  int grade = 0;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

// Total mapping doc_id -> resource_id plus the materialized resources.
class DocMap {
 public:
  DocMap() = default;

  // Throws ValidationError if the document is already mapped elsewhere.
  void add(const std::string& doc_id, const std::string& resource_id);

  const std::string* resource_of(const std::string& doc_id) const;
  std::vector<ResourceRecord> resources() const;
  std::vector<std::string> resource_ids() const;
  std::size_t document_count() const { return doc_to_resource_.size(); }
  std::size_t resource_count() const { return members_.size(); }
  const std::map<std::string, std::string>& entries() const {
    return doc_to_resource_;
  }

 private:
  std::map<std::string, std::string> doc_to_resource_;
  std::map<std::string, std::set<std::string>> members_;
};

using PairKey = std::pair<std::string, std::string>;  // (query_id, resource_id)

// Canonical judgment collection: grades clamped at 0, duplicate
// (query, doc) pairs collapsed to their maximum grade, sorted by
// (query_id, doc_id). After resolve() every judgment carries its resource
// and the (query, resource) coverage index is available.
class JudgmentSet {
 public:
  JudgmentSet() = default;
  explicit JudgmentSet(std::vector<Judgment> raw);

  const std::vector<Judgment>& judgments() const { return judgments_; }
  const std::vector<std::string>& query_ids() const { return query_ids_; }
  std::size_t size() const { return judgments_.size(); }
  bool empty() const { return judgments_.empty(); }

  // Throws ValidationError naming the first document missing from the map.
  void resolve(const DocMap& doc_map);
  bool resolved() const { return resolved_; }
  const std::string& resource_of(std::size_t judgment_index) const;
  // (query, resource) -> indices into judgments(); requires resolve().
  const std::map<PairKey, std::vector<std::size_t>>& coverage() const;

  std::optional<int> grade(const std::string& query_id,
                           const std::string& doc_id) const;
  bool has_query(const std::string& query_id) const;

  // Subset restricted to the given queries, keeping resolution.
  JudgmentSet restrict_to(const std::set<std::string>& query_ids) const;

  friend bool operator==(const JudgmentSet& a, const JudgmentSet& b) {
    return a.judgments_ == b.judgments_;
  }

 private:
  void build_index();

  std::vector<Judgment> judgments_;
  std::vector<std::string> query_ids_;
  bool resolved_ = false;
  std::vector<std::string> resources_;
  std::map<PairKey, std::vector<std::size_t>> coverage_;
};

// Queries TSV: `query_id<TAB>text`.
std::vector<QueryRecord> parse_queries(std::istream& in);
// TREC qrels: `query_id iteration doc_id grade`.
JudgmentSet parse_qrels(std::istream& in);
// Doc-map TSV: `doc_id<TAB>resource_id`.
DocMap parse_doc_map(std::istream& in);
// Optional document text TSV: `doc_id<TAB>title<TAB>body`.
std::vector<DocumentRecord> parse_documents(std::istream& in);

std::string serialize_queries(const std::vector<QueryRecord>& queries);
std::string serialize_qrels(const JudgmentSet& judgments);
std::string serialize_doc_map(const DocMap& doc_map);
std::string serialize_documents(const std::vector<DocumentRecord>& docs);

struct TopDocuments {
  // resource_id -> at most N doc ids, best first. Every resource of the doc
  // map has an entry; it is empty when nothing in it was judged.
  std::map<std::string, std::vector<std::string>> per_resource;
  std::vector<std::string> unjudged_resources;
};

// Per resource, ranks judged documents by the sum of their grades over the
// given queries (all judged queries when `queries` is null), descending,
// ties by ascending doc_id, and keeps the first N.
TopDocuments select_top_documents(const JudgmentSet& judgments,
                                  const DocMap& doc_map, std::size_t top_n,
                                  const std::set<std::string>* queries = nullptr);

struct Dataset {
  std::vector<QueryRecord> queries;
  std::vector<DocumentRecord> documents;  // optional text; may be empty
  DocMap doc_map;
  JudgmentSet judgments;

  const QueryRecord* find_query(const std::string& query_id) const;
  const DocumentRecord* find_document(const std::string& doc_id) const;
  // Cross-file checks; resolves the judgments against the doc map.
  void validate();
};

struct DatasetManifest {
  std::size_t queries = 0;
  std::size_t documents = 0;
  std::size_t resources = 0;
  std::size_t judgments = 0;
  std::map<std::string, std::string> provenance;
  std::string digest;  // 16 hex digits over the canonical serialization

  std::string to_text() const;
  static DatasetManifest from_text(std::istream& in);
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

DatasetManifest dataset_stats(const Dataset& dataset);

// Dataset directory layout used by the CLI.
inline constexpr const char* kQueriesFile = "queries.tsv";
inline constexpr const char* kQrelsFile = "qrels.txt";
inline constexpr const char* kDocMapFile = "docmap.tsv";
inline constexpr const char* kDocumentsFile = "docs.tsv";
inline constexpr const char* kManifestFile = "manifest.txt";

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const DatasetManifest& manifest);
Dataset load_dataset(const std::filesystem::path& dir);
// Parses and validates individual files; an empty `documents` path means no
// document text. Parse errors are prefixed with `path:line`.
Dataset load_sources(const std::filesystem::path& queries,
                     const std::filesystem::path& qrels,
                     const std::filesystem::path& doc_map,
                     const std::filesystem::path& documents = {});

}  // namespace fedrank::corpus
