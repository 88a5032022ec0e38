#include "fedrank/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fedrank/error.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::metrics {

RankedList::RankedList(std::vector<ScoredItem> items) : items_(std::move(items)) {
  for (const auto& it : items_) {
    if (std::isnan(it.score)) throw ValidationError("NaN score for " + it.id);
  }
  std::sort(items_.begin(), items_.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::set<std::string> seen;
  for (const auto& it : items_) {
    if (!seen.insert(it.id).second) {
      throw ValidationError("duplicate id " + it.id + " in ranked list");
    }
  }
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& it : items_) out.push_back(it.id);
  return out;
}

RankedList RankedList::prefix(std::size_t k) const {
  RankedList out;
  out.items_.assign(items_.begin(),
                    items_.begin() + static_cast<std::ptrdiff_t>(std::min(k, items_.size())));
  return out;
}

ResourceRelevance resource_relevance(const corpus::JudgmentSet& judgments,
                                     const std::string& query_id,
                                     const corpus::DocMap& doc_map) {
  if (!judgments.has_query(query_id)) {
    throw ValidationError("query " + query_id + " has no judgments");
  }
  ResourceRelevance rel;
  for (const auto& rid : doc_map.resource_ids()) rel[rid] = 0.0;
  const auto& all = judgments.judgments();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].query_id != query_id) continue;
    rel[judgments.resource_of(i)] += all[i].grade;
  }
  return rel;
}

namespace {

double rel_of(const ResourceRelevance& rel, const std::string& id) {
  auto it = rel.find(id);
  return it == rel.end() ? 0.0 : it->second;
}

std::vector<double> ideal_order(const ResourceRelevance& rel) {
  std::vector<double> values;
  values.reserve(rel.size());
  for (const auto& [id, v] : rel) values.push_back(v);
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

double gain_of(double r, Gain gain) {
  return gain == Gain::exponential ? std::exp2(r) - 1.0 : r;
}

void require_k(std::size_t k) {
  if (k == 0) throw UsageError("cutoff k must be at least 1");
}

}  // namespace

double precision_at_k(const RankedList& ranking, const std::set<std::string>& relevant,
                      std::size_t k) {
  require_k(k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    if (relevant.contains(ranking[i].id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double normalized_precision_at_k(const RankedList& ranking,
                                 const ResourceRelevance& rel, std::size_t k) {
  require_k(k);
  double got = 0.0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    got += rel_of(rel, ranking[i].id);
  }
  const auto ideal = ideal_order(rel);
  double best = 0.0;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) best += ideal[i];
  if (best <= 0.0) return 1.0;
  return got / best;
}

double ndcg_at_k(const RankedList& ranking, const ResourceRelevance& rel,
                 std::size_t k, Gain gain) {
  require_k(k);
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    dcg += gain_of(rel_of(rel, ranking[i].id), gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  const auto ideal = ideal_order(rel);
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) {
    idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg <= 0.0) return 1.0;
  return dcg / idcg;
}

std::set<std::string> relevant_set(const ResourceRelevance& rel) {
  std::set<std::string> out;
  for (const auto& [id, v] : rel) {
    if (v > 0.0) out.insert(id);
  }
  return out;
}

void MetricReport::add(const std::string& query_id, double value) {
  per_query.emplace_back(query_id, value);
}

void MetricReport::finalize() {
  double s = 0.0;
  for (const auto& [q, v] : per_query) s += v;
  mean = per_query.empty() ? 0.0 : s / static_cast<double>(per_query.size());
}

std::string to_tsv(const std::vector<MetricReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    for (const auto& [q, v] : r.per_query) {
      out += q + "\t" + r.metric + "\t" + std::to_string(r.k) + "\t" + text::real(v) + "\n";
    }
  }
  for (const auto& r : reports) {
    out += "all\t" + r.metric + "\t" + std::to_string(r.k) + "\t" + text::real(r.mean) + "\n";
  }
  return out;
}

MetricSpec parse_metric(const std::string& text_in) {
  std::string t;
  for (char c : text_in) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto at = t.find('@');
  if (at == std::string::npos) throw UsageError("metric must look like name@k: " + text_in);
  MetricSpec spec;
  spec.name = t.substr(0, at);
  if (spec.name != "ndcg" && spec.name != "np" && spec.name != "p") {
    throw UsageError("unknown metric " + spec.name);
  }
  try {
    std::size_t used = 0;
    spec.k = std::stoul(t.substr(at + 1), &used);
    if (used != t.size() - at - 1 || spec.k == 0) throw std::invalid_argument("k");
  } catch (const std::exception&) {
    throw UsageError("bad cutoff in metric " + text_in);
  }
  return spec;
}

std::vector<MetricSpec> default_metrics() {
  return {{"ndcg", 10}, {"ndcg", 20}, {"np", 1}, {"np", 5}, {"np", 10}, {"p", 10}};
}

double evaluate(const MetricSpec& spec, const RankedList& ranking,
                const ResourceRelevance& rel, Gain gain) {
  if (spec.name == "ndcg") return ndcg_at_k(ranking, rel, spec.k, gain);
  if (spec.name == "np") return normalized_precision_at_k(ranking, rel, spec.k);
  if (spec.name == "p") return precision_at_k(ranking, relevant_set(rel), spec.k);
  throw UsageError("unknown metric " + spec.name);
}

}  // namespace fedrank::metrics
