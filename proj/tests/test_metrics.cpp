#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fedrank/error.hpp"
#include "fedrank/graph.hpp"
#include "fedrank/metrics.hpp"
#include "fedrank/random.hpp"
#include "fedrank/synthetic.hpp"
#include "suites.hpp"

using namespace fedrank;
using namespace fedrank::metrics;

namespace {

// Ranked list whose order is exactly `ids` (scores strictly decreasing).
RankedList in_order(const std::vector<std::string>& ids) {
  std::vector<ScoredItem> items;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    items.push_back({ids[i], static_cast<double>(ids.size() - i)});
  }
  return RankedList(items);
}

}  // namespace

TEST_CASE("ranked lists sort by score then id and reject duplicates") {
  const RankedList r({{"b", 0.5}, {"a", 0.5}, {"c", 0.9}});
  CHECK(r.ids() == std::vector<std::string>{"c", "a", "b"});
  CHECK(r.prefix(2).ids() == std::vector<std::string>{"c", "a"});
  CHECK(r.prefix(10).size() == 3);
  CHECK_THROWS_AS(RankedList({{"a", 1.0}, {"a", 0.5}}), ValidationError);
  CHECK_THROWS_AS(RankedList({{"a", NAN}}), ValidationError);
}

TEST_CASE("resource relevance sums grades per resource") {
  std::istringstream q("q1 0 a 2\nq1 0 b 3\nq1 0 c 1\nq2 0 a 0\n");
  std::istringstream d("a\tR1\nb\tR1\nc\tR2\nz\tR3\n");
  auto js = corpus::parse_qrels(q);
  const auto dm = corpus::parse_doc_map(d);
  js.resolve(dm);
  const auto rel = resource_relevance(js, "q1", dm);
  CHECK(rel.at("R1") == 5.0);
  CHECK(rel.at("R2") == 1.0);
  CHECK(rel.at("R3") == 0.0);
  for (const auto& [r, v] : resource_relevance(js, "q2", dm)) CHECK(v == 0.0);
  CHECK_THROWS_AS(resource_relevance(js, "q9", dm), ValidationError);
}

TEST_CASE("resource relevance agrees with qr weights over alpha") {
  const auto corpus = synthetic::generate("topic", 1);
  const auto& ds = corpus.dataset;
  const double alpha = graph::compute_alpha(ds.judgments);
  const auto table = graph::qr_weights(ds.judgments, alpha);
  for (const auto& qid : ds.judgments.query_ids()) {
    for (const auto& [rid, v] : resource_relevance(ds.judgments, qid, ds.doc_map)) {
      const auto it = table.find({qid, rid});
      if (it == table.end()) {
        CHECK(v == 0.0);
      } else {
        CHECK(it->second / alpha == doctest::Approx(v).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("precision at k") {
  const auto r = in_order({"d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8", "d9", "d10"});
  CHECK(precision_at_k(r, {"d1", "d4", "d7", "d10", "x"}, 10) == doctest::Approx(0.4));
  CHECK(precision_at_k(r, {"d1", "d2", "d3"}, 3) == 1.0);
  CHECK(precision_at_k(in_order({"d1"}), {"d1"}, 5) == doctest::Approx(0.2));
}

TEST_CASE("normalized precision at k") {
  const ResourceRelevance rel{{"A", 4}, {"B", 5}, {"C", 0}};
  CHECK(normalized_precision_at_k(in_order({"A", "B", "C"}), rel, 1) == doctest::Approx(0.8));
  CHECK(normalized_precision_at_k(in_order({"B", "A", "C"}), rel, 2) == 1.0);
  const ResourceRelevance zero{{"A", 0}, {"B", 0}};
  CHECK(normalized_precision_at_k(in_order({"A", "B"}), zero, 1) == 1.0);
}

TEST_CASE("nDCG worked example and conventions") {
  const ResourceRelevance rel{{"a", 3}, {"b", 1}, {"c", 2}};
  const double v = ndcg_at_k(in_order({"a", "b", "c"}), rel, 2);
  // DCG = 7 + 1/log2(3), IDCG = 7 + 3/log2(3).
  CHECK(v == doctest::Approx(0.85810).epsilon(1e-5));
  CHECK(v == doctest::Approx((7.0 + 1.0 / std::log2(3.0)) / (7.0 + 3.0 / std::log2(3.0))));
  CHECK(ndcg_at_k(in_order({"a", "c", "b"}), rel, 3) == 1.0);
  CHECK(ndcg_at_k(in_order({"a", "b"}), {{"a", 0}, {"b", 0}}, 2) == 1.0);
  // Order below k does not matter.
  CHECK(ndcg_at_k(in_order({"a", "b", "c"}), rel, 1) ==
        ndcg_at_k(in_order({"a", "c", "b"}), rel, 1));
  // Linear gain: DCG = 3 + 1/log2(3), IDCG = 3 + 2/log2(3).
  CHECK(ndcg_at_k(in_order({"a", "b", "c"}), rel, 2, Gain::linear) ==
        doctest::Approx((3.0 + 1.0 / std::log2(3.0)) / (3.0 + 2.0 / std::log2(3.0))));
}

TEST_CASE("exhaustive and brute-force metric oracles") {
  const auto r = test::metric_oracles(77);
  CHECK(r.instances > 1000);
  CHECK(r.failures == 0);
  CHECK(r.worked_example == doctest::Approx(0.85810).epsilon(1e-5));
}

TEST_CASE("metrics stay in [0, 1] and swapping a worse item up never helps") {
  Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    std::vector<std::string> ids;
    ResourceRelevance rel;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("r" + std::to_string(i));
      rel[ids.back()] = static_cast<double>(rng.below(4));
    }
    rng.shuffle(ids);
    const std::size_t k = 1 + rng.below(n);
    const auto base = in_order(ids);
    const double nd = ndcg_at_k(base, rel, k), np = normalized_precision_at_k(base, rel, k);
    for (double v : {nd, np, precision_at_k(base, relevant_set(rel), k)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    const std::size_t i = rng.below(n - 1);
    const std::size_t j = i + 1 + rng.below(n - 1 - i);
    if (rel[ids[i]] < rel[ids[j]]) {
      // Moving the better item up must not hurt.
      auto better = ids;
      std::swap(better[i], better[j]);
      CHECK(ndcg_at_k(in_order(better), rel, k) >= nd - 1e-12);
      CHECK(normalized_precision_at_k(in_order(better), rel, k) >= np - 1e-12);
    }
  }
}

TEST_CASE("P@k equals nP@k for binary grades with at least k relevant") {
  const ResourceRelevance rel{{"a", 1}, {"b", 0}, {"c", 1}, {"d", 1}, {"e", 0}};
  const auto r = in_order({"b", "a", "e", "c", "d"});
  for (std::size_t k = 1; k <= 3; ++k) {
    CHECK(precision_at_k(r, relevant_set(rel), k) ==
          doctest::Approx(normalized_precision_at_k(r, rel, k)));
  }
}

TEST_CASE("reports average per-query values and render as TSV") {
  MetricReport m{"ndcg", 10, {}, 0.0};
  m.add("q1", 0.5);
  m.add("q2", 1.0);
  m.finalize();
  CHECK(m.mean == doctest::Approx(0.75));
  const auto tsv = to_tsv({m});
  CHECK(tsv.find("q1\tndcg\t10\t") != std::string::npos);
  CHECK(tsv.find("all\tndcg\t10\t") != std::string::npos);
}

TEST_CASE("metric specs parse") {
  CHECK(parse_metric("ndcg@10") == MetricSpec{"ndcg", 10});
  CHECK(parse_metric("np@5") == MetricSpec{"np", 5});
  CHECK(parse_metric("p@1").label() == "p@1");
  CHECK_THROWS_AS(parse_metric("map@10"), UsageError);
  CHECK_THROWS_AS(parse_metric("ndcg@0"), UsageError);
  CHECK_THROWS_AS(parse_metric("ndcg"), UsageError);
}
