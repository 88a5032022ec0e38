#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fedrank/broker.hpp"
#include "fedrank/error.hpp"
#include "fedrank/random.hpp"
#include "suites.hpp"

using namespace fedrank;
using namespace fedrank::broker;
using metrics::RankedList;

namespace {

struct Fixture {
  corpus::DocMap doc_map;
  corpus::JudgmentSet judgments;
};

// R1 = {d1, d2, d3}, R2 = {d4, d5}, R3 = {d6}. q1 has relevant documents in
// R1 and R2; q2 only in R3.
Fixture small_fixture() {
  Fixture f;
  std::istringstream dm("d1\tR1\nd2\tR1\nd3\tR1\nd4\tR2\nd5\tR2\nd6\tR3\n");
  f.doc_map = corpus::parse_doc_map(dm);
  std::istringstream q(
      "q1 0 d1 3\nq1 0 d2 1\nq1 0 d3 0\nq1 0 d4 2\nq1 0 d6 0\n"
      "q2 0 d6 1\nq2 0 d1 0\n");
  f.judgments = corpus::parse_qrels(q);
  f.judgments.resolve(f.doc_map);
  return f;
}

RankedList ranking(const std::vector<std::string>& ids) {
  std::vector<metrics::ScoredItem> items;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    items.push_back({ids[i], 1.0 - 0.1 * static_cast<double>(i)});
  }
  return RankedList(items);
}

}  // namespace

TEST_CASE("select_resources takes the ranking prefix") {
  std::vector<std::string> ids;
  for (int i = 0; i < 123; ++i) ids.push_back("R" + std::to_string(1000 + i));
  const auto r = ranking(ids);
  const auto four = select_resources(r, 4);
  CHECK(four == std::vector<std::string>(ids.begin(), ids.begin() + 4));
  CHECK(select_resources(r, 500).size() == 123);
  for (std::size_t t = 1; t < 20; ++t) {
    const auto a = select_resources(r, t), b = select_resources(r, t + 1);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK_THROWS_AS(select_resources(r, 0), UsageError);
}

TEST_CASE("oracle retrieval ranks judged documents by grade") {
  const auto f = small_fixture();
  const auto backend = RetrievalBackend::oracle(f.doc_map, f.judgments);
  CHECK(backend.retrieve("R1", {"q1", {}}).ids() == std::vector<std::string>{"d1", "d2", "d3"});
  CHECK(backend.retrieve("R1", {"q1", {}}, 1).ids() == std::vector<std::string>{"d1"});
  CHECK(backend.retrieve("R2", {"q1", {}}).ids() == std::vector<std::string>{"d4"});
  CHECK(backend.retrieve("R2", {"q2", {}}).size() == 0);
  CHECK_THROWS_AS(backend.retrieve("R9", {"q1", {}}), ValidationError);
  CHECK(kDefaultLimit == 1000);
}

TEST_CASE("cosine retrieval agrees with a brute-force sort") {
  Rng rng(12);
  corpus::DocMap dm;
  embedding::EmbeddingStore docs(5, embedding::StoreKind::document);
  for (int i = 0; i < 30; ++i) {
    const std::string id = "d" + std::to_string(i);
    dm.add(id, "R" + std::to_string(i % 3));
    std::vector<double> v(5);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    docs.add(id, v);
  }
  const auto backend = RetrievalBackend::cosine(dm, docs);
  const BrokerQuery q{"q", {0.3, -0.1, 0.8, 0.2, -0.5}};
  for (const auto& r : dm.resource_ids()) {
    const auto got = backend.retrieve(r, q);
    std::vector<std::pair<double, std::string>> expected;
    for (const auto& d : backend.documents(r)) {
      const auto v = docs.get(d);
      expected.push_back({-embedding::cosine(q.vector, v), d});
    }
    std::sort(expected.begin(), expected.end());
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == expected[i].second);
      CHECK(got[i].score == -expected[i].first);
    }
    CHECK(backend.retrieve(r, q, 3).ids() == got.prefix(3).ids());
  }
}

TEST_CASE("merge interleaves by raw score") {
  const RankedList a({{"x", 0.5}}), b({{"y", 0.9}});
  const std::vector<RankedList> two{a, b};
  CHECK(merge(two).ids() == std::vector<std::string>{"y", "x"});
  const std::vector<RankedList> with_empty{RankedList(), b};
  CHECK(merge(with_empty).items() == b.items());

  Rng rng(3);
  std::vector<RankedList> lists;
  std::vector<metrics::ScoredItem> concat;
  for (int l = 0; l < 4; ++l) {
    std::vector<metrics::ScoredItem> items;
    for (int i = 0; i < 6; ++i) {
      // Coarse scores so that ties across lists occur.
      items.push_back({"L" + std::to_string(l) + "d" + std::to_string(i),
                       static_cast<double>(rng.below(4))});
    }
    concat.insert(concat.end(), items.begin(), items.end());
    lists.emplace_back(items);
  }
  std::sort(concat.begin(), concat.end(), [](const auto& x, const auto& y) {
    return x.score != y.score ? x.score > y.score : x.id < y.id;
  });
  CHECK(merge(lists).items() == concat);
}

TEST_CASE("document-level precision") {
  const auto f = small_fixture();
  const auto backend = RetrievalBackend::oracle(f.doc_map, f.judgments);
  const auto resources = ranking({"R1", "R2", "R3"});

  std::vector<BrokerRun> runs{run_query(backend, {"q1", {}}, resources, 3)};
  // Relevant for q1: d1, d2, d4.
  CHECK(evaluate_document_level(runs, f.judgments, 10).mean == doctest::Approx(0.3));
  CHECK(evaluate_document_level(runs, f.judgments, 2).mean == 1.0);

  // q2's only relevant document lives in R3, which is not selected.
  runs = {run_query(backend, {"q2", {}}, resources, 2)};
  CHECK(evaluate_document_level(runs, f.judgments, 10).mean == 0.0);

  std::vector<metrics::ScoredItem> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({"m" + std::to_string(i), 10.0 - i});
  BrokerRun hand{"q", {}, {}, RankedList(ten)};
  const corpus::JudgmentSet js({{"q", "m0", 1}, {"q", "m3", 2}, {"q", "m5", 1},
                                {"q", "m9", 3}, {"q", "m1", 0}});
  CHECK(evaluate_document_level(std::vector<BrokerRun>{hand}, js, 10).mean ==
        doctest::Approx(0.4));
}

TEST_CASE("runs keep membership and length bounds") {
  const auto f = small_fixture();
  const auto backend = RetrievalBackend::oracle(f.doc_map, f.judgments);
  const auto resources = ranking({"R2", "R1", "R3"});
  for (std::size_t t = 1; t <= 4; ++t) {
    for (std::size_t limit : {1u, 2u, 1000u}) {
      const auto run = run_query(backend, {"q1", {}}, resources, t, limit);
      CHECK(run.selected.size() == std::min<std::size_t>(t, 3));
      CHECK(run.merged.size() <= t * limit);
      const std::set<std::string> chosen(run.selected.begin(), run.selected.end());
      for (const auto& item : run.merged.items()) {
        const auto owner = run.resource_of(item.id);
        CHECK(chosen.contains(owner));
        CHECK(*f.doc_map.resource_of(item.id) == owner);
      }
    }
  }
}

TEST_CASE("oracle precision never drops as T grows") {
  const auto corpus = synthetic::generate("topic", 4);
  const auto& ds = corpus.dataset;
  const auto backend = RetrievalBackend::oracle(ds.doc_map, ds.judgments);
  const auto resources = ranking(ds.doc_map.resource_ids());
  for (const auto& qid : ds.judgments.query_ids()) {
    double previous = -1.0;
    for (std::size_t t = 1; t <= ds.doc_map.resource_count(); ++t) {
      const std::vector<BrokerRun> runs{run_query(backend, {qid, {}}, resources, t)};
      const double p = evaluate_document_level(runs, ds.judgments, 10).mean;
      CHECK(p >= previous);
      previous = p;
    }
  }
}

TEST_CASE("oracle with every resource reaches the brute-force optimum") {
  const auto r = test::broker_oracle_bound(8, 60);
  CHECK(r.fixtures == 60);
  CHECK(r.max_docs <= 20);
  CHECK(r.mismatches == 0);
}

TEST_CASE("oracle beats cosine on the topic corpus") {
  const auto corpus = synthetic::generate("topic", 2);
  const auto& ds = corpus.dataset;
  const auto oracle = RetrievalBackend::oracle(ds.doc_map, ds.judgments);
  const auto cosine = RetrievalBackend::cosine(ds.doc_map, corpus.documents);
  const auto resources = ranking(ds.doc_map.resource_ids());
  std::vector<BrokerRun> a, b;
  for (const auto& qid : ds.judgments.query_ids()) {
    const BrokerQuery q{qid, corpus.queries.get(qid)};
    a.push_back(run_query(oracle, q, resources, 8));
    b.push_back(run_query(cosine, q, resources, 8));
  }
  CHECK(evaluate_document_level(a, ds.judgments, 10).mean >=
        evaluate_document_level(b, ds.judgments, 10).mean);
}

TEST_CASE("run log format") {
  const auto f = small_fixture();
  const auto backend = RetrievalBackend::oracle(f.doc_map, f.judgments);
  const std::vector<BrokerRun> runs{run_query(backend, {"q1", {}}, ranking({"R2", "R1"}), 2)};
  const auto tsv = run_log_tsv(runs);
  CHECK(tsv.rfind("q1\t1\td1\tR1\t3.000000\n", 0) == 0);
  CHECK(tsv.find("q1\t2\td4\tR2\t2.000000\n") != std::string::npos);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);
  CHECK(parse_backend("cosine") == BackendMode::cosine);
  CHECK_THROWS_AS(parse_backend("bm25"), UsageError);
}
