#pragma once

// Simulated distributed retrieval: pick the top-T resources from a resource
// ranking, fetch a ranked document list from each, merge by raw score and
// score the merged list at document level.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedrank/corpus.hpp"
#include "fedrank/embedding.hpp"
#include "fedrank/metrics.hpp"

namespace fedrank::broker {

inline constexpr std::size_t kDefaultLimit = 1000;

enum class BackendMode { oracle, cosine };

const char* to_string(BackendMode mode);
BackendMode parse_backend(const std::string& text);

// What a backend sees of a query: its id (oracle) and vector (cosine).
struct BrokerQuery {
  std::string id;
  embedding::EmbeddingVector vector;
};

class RetrievalBackend {
 public:
  // Ranks a resource's judged documents by grade.
  static RetrievalBackend oracle(const corpus::DocMap& doc_map,
                                 const corpus::JudgmentSet& judgments);
  // Ranks every document of a resource by cosine with the query vector.
  static RetrievalBackend cosine(const corpus::DocMap& doc_map,
                                 const embedding::EmbeddingStore& doc_store);

  BackendMode mode() const { return mode_; }
  bool has_resource(const std::string& resource_id) const;
  // Member documents, ascending.
  const std::vector<std::string>& documents(const std::string& resource_id) const;

  // Throws ValidationError for an unknown resource.
  metrics::RankedList retrieve(const std::string& resource_id, const BrokerQuery& query,
                               std::size_t limit = kDefaultLimit) const;

 private:
  RetrievalBackend(BackendMode mode, const corpus::DocMap& doc_map);

  BackendMode mode_;
  std::map<std::string, std::vector<std::string>> index_;
  corpus::JudgmentSet judgments_;
  embedding::EmbeddingStore docs_{1};
};

// First min(T, size) ids of the ranking. T must be at least 1.
std::vector<std::string> select_resources(const metrics::RankedList& ranking,
                                          std::size_t t);

// Raw-score interleaving of per-resource lists.
metrics::RankedList merge(std::span<const metrics::RankedList> lists);

struct BrokerRun {
  std::string query_id;
  std::vector<std::string> selected;
  std::vector<metrics::RankedList> per_resource;  // parallel to `selected`
  metrics::RankedList merged;

  // Resource of a merged document; empty when it is not in any list.
  std::string resource_of(const std::string& doc_id) const;
};

BrokerRun run_query(const RetrievalBackend& backend, const BrokerQuery& query,
                    const metrics::RankedList& resource_ranking, std::size_t t,
                    std::size_t limit = kDefaultLimit);

// Per-query P@k over merged lists with relevant = grade >= 1.
metrics::MetricReport evaluate_document_level(std::span<const BrokerRun> runs,
                                              const corpus::JudgmentSet& judgments,
                                              std::size_t k);

// `query_id<TAB>rank<TAB>doc_id<TAB>resource_id<TAB>score`, ranks from 1.
std::string run_log_tsv(std::span<const BrokerRun> runs);

}  // namespace fedrank::broker
