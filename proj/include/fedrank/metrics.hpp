#pragma once

// Ranked lists and the P@k, nP@k and nDCG@k ranking metrics.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fedrank/corpus.hpp"

namespace fedrank::metrics {

struct ScoredItem {
  std::string id;
  double score = 0.0;
  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

// Items ordered by descending score, ties by ascending id, ids unique.
class RankedList {
 public:
  RankedList() = default;
  // Sorts; throws ValidationError on duplicate ids or NaN scores.
  explicit RankedList(std::vector<ScoredItem> items);

  const std::vector<ScoredItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const ScoredItem& operator[](std::size_t i) const { return items_[i]; }
  std::vector<std::string> ids() const;
  // First min(k, size) items.
  RankedList prefix(std::size_t k) const;

  friend bool operator==(const RankedList&, const RankedList&) = default;

 private:
  std::vector<ScoredItem> items_;
};

// resource_id -> summed grade for one query; resources without judgments
// are present with 0.
using ResourceRelevance = std::map<std::string, double>;

// Per-resource sum of grades of `query_id`. Throws ValidationError for a
// query with no judgments. Requires resolved judgments.
ResourceRelevance resource_relevance(const corpus::JudgmentSet& judgments,
                                     const std::string& query_id,
                                     const corpus::DocMap& doc_map);

// |top-k ∩ relevant| / k; the denominator stays k for short lists.
double precision_at_k(const RankedList& ranking, const std::set<std::string>& relevant,
                      std::size_t k);

// Relevance mass of the predicted top k over that of the ideal top k;
// 1 when the ideal mass is 0.
double normalized_precision_at_k(const RankedList& ranking,
                                 const ResourceRelevance& rel, std::size_t k);

enum class Gain { exponential, linear };

// DCG@k with gain 2^rel - 1 (or rel) and discount log2(i + 1), normalized by
// the DCG of the ideal order; 1 when the ideal DCG is 0.
double ndcg_at_k(const RankedList& ranking, const ResourceRelevance& rel,
                 std::size_t k, Gain gain = Gain::exponential);

// Resources with positive relevance.
std::set<std::string> relevant_set(const ResourceRelevance& rel);

struct MetricReport {
  std::string metric;
  std::size_t k = 0;
  std::vector<std::pair<std::string, double>> per_query;
  double mean = 0.0;

  void add(const std::string& query_id, double value);
  // Recomputes `mean` as the arithmetic mean of per_query.
  void finalize();
};

// `query_id<TAB>metric<TAB>k<TAB>value` rows followed by an `all` summary row.
std::string to_tsv(const std::vector<MetricReport>& reports);

// Named metric specifications such as "ndcg@10", "np@5", "p@10".
struct MetricSpec {
  std::string name;  // "ndcg" | "np" | "p"
  std::size_t k = 10;
  std::string label() const { return name + "@" + std::to_string(k); }
  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

MetricSpec parse_metric(const std::string& text);
std::vector<MetricSpec> default_metrics();

double evaluate(const MetricSpec& spec, const RankedList& ranking,
                const ResourceRelevance& rel, Gain gain = Gain::exponential);

}  // namespace fedrank::metrics
