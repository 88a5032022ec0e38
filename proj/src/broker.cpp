#include "fedrank/broker.hpp"

#include <algorithm>

#include "fedrank/error.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::broker {

const char* to_string(BackendMode mode) {
  return mode == BackendMode::oracle ? "oracle" : "cosine";
}

BackendMode parse_backend(const std::string& text) {
  if (text == "oracle") return BackendMode::oracle;
  if (text == "cosine") return BackendMode::cosine;
  throw UsageError("unknown backend '" + text + "' (expected oracle or cosine)");
}

RetrievalBackend::RetrievalBackend(BackendMode mode, const corpus::DocMap& doc_map)
    : mode_(mode) {
  for (const auto& r : doc_map.resources()) index_[r.resource_id] = r.doc_ids;
}

RetrievalBackend RetrievalBackend::oracle(const corpus::DocMap& doc_map,
                                          const corpus::JudgmentSet& judgments) {
  RetrievalBackend b(BackendMode::oracle, doc_map);
  b.judgments_ = judgments;
  return b;
}

RetrievalBackend RetrievalBackend::cosine(const corpus::DocMap& doc_map,
                                          const embedding::EmbeddingStore& doc_store) {
  RetrievalBackend b(BackendMode::cosine, doc_map);
  b.docs_ = doc_store;
  return b;
}

bool RetrievalBackend::has_resource(const std::string& resource_id) const {
  return index_.contains(resource_id);
}

const std::vector<std::string>& RetrievalBackend::documents(
    const std::string& resource_id) const {
  auto it = index_.find(resource_id);
  if (it == index_.end()) throw ValidationError("unknown resource " + resource_id);
  return it->second;
}

metrics::RankedList RetrievalBackend::retrieve(const std::string& resource_id,
                                               const BrokerQuery& query,
                                               std::size_t limit) const {
  std::vector<metrics::ScoredItem> items;
  for (const auto& doc : documents(resource_id)) {
    if (mode_ == BackendMode::oracle) {
      if (auto g = judgments_.grade(query.id, doc)) {
        items.push_back({doc, static_cast<double>(*g)});
      }
    } else if (docs_.contains(doc)) {
      const auto v = docs_.get(doc);
      items.push_back({doc, embedding::cosine(std::span<const double>(query.vector),
                                              std::span<const double>(v))});
    }
  }
  return metrics::RankedList(std::move(items)).prefix(limit);
}

std::vector<std::string> select_resources(const metrics::RankedList& ranking,
                                          std::size_t t) {
  if (t == 0) throw UsageError("T must be at least 1");
  return ranking.prefix(t).ids();
}

metrics::RankedList merge(std::span<const metrics::RankedList> lists) {
  std::vector<metrics::ScoredItem> all;
  for (const auto& l : lists) all.insert(all.end(), l.items().begin(), l.items().end());
  return metrics::RankedList(std::move(all));
}

std::string BrokerRun::resource_of(const std::string& doc_id) const {
  for (std::size_t i = 0; i < per_resource.size(); ++i) {
    for (const auto& item : per_resource[i].items()) {
      if (item.id == doc_id) return selected[i];
    }
  }
  return {};
}

BrokerRun run_query(const RetrievalBackend& backend, const BrokerQuery& query,
                    const metrics::RankedList& resource_ranking, std::size_t t,
                    std::size_t limit) {
  BrokerRun run;
  run.query_id = query.id;
  run.selected = select_resources(resource_ranking, t);
  for (const auto& r : run.selected) run.per_resource.push_back(backend.retrieve(r, query, limit));
  run.merged = merge(run.per_resource);
  return run;
}

metrics::MetricReport evaluate_document_level(std::span<const BrokerRun> runs,
                                              const corpus::JudgmentSet& judgments,
                                              std::size_t k) {
  metrics::MetricReport report{"p", k, {}, 0.0};
  for (const auto& run : runs) {
    std::set<std::string> relevant;
    for (const auto& j : judgments.judgments()) {
      if (j.query_id == run.query_id && j.grade >= 1) relevant.insert(j.doc_id);
    }
    report.add(run.query_id, metrics::precision_at_k(run.merged, relevant, k));
  }
  report.finalize();
  return report;
}

std::string run_log_tsv(std::span<const BrokerRun> runs) {
  std::string out;
  for (const auto& run : runs) {
    std::map<std::string, std::string> owner;
    for (std::size_t i = 0; i < run.selected.size(); ++i) {
      for (const auto& item : run.per_resource[i].items()) owner[item.id] = run.selected[i];
    }
    for (std::size_t i = 0; i < run.merged.size(); ++i) {
      const auto& item = run.merged[i];
      out += run.query_id + "\t" + std::to_string(i + 1) + "\t" + item.id + "\t" +
             owner[item.id] + "\t" + text::real(item.score) + "\n";
    }
  }
  return out;
}

}  // namespace fedrank::broker
