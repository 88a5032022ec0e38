#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fedrank/corpus.hpp"
#include "fedrank/error.hpp"
#include "fedrank/random.hpp"
#include "fedrank/synthetic.hpp"
#include "support.hpp"

using namespace fedrank;
using namespace fedrank::corpus;

namespace {

std::vector<QueryRecord> queries_of(const std::string& text) {
  std::istringstream in(text);
  return parse_queries(in);
}

JudgmentSet qrels_of(const std::string& text) {
  std::istringstream in(text);
  return parse_qrels(in);
}

DocMap doc_map_of(const std::string& text) {
  std::istringstream in(text);
  return parse_doc_map(in);
}

std::size_t error_line(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("a single query line parses") {
  const auto qs = queries_of("q1\tobama family tree\n");
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].query_id == "q1");
  CHECK(qs[0].text == "obama family tree");
  CHECK(queries_of("").empty());
}

TEST_CASE("query parse errors name the offending line") {
  CHECK(error_line([] { queries_of("q1\ta\nq1\tb\n"); }) == 2);
  CHECK(error_line([] { queries_of("q1\ta\nq2\tb\nno tab here\n"); }) == 3);
}

TEST_CASE("qrels: grades are clamped and duplicates keep the maximum") {
  auto one = qrels_of("201 0 d7 2\n");
  REQUIRE(one.size() == 1);
  CHECK(one.judgments()[0] == Judgment{"201", "d7", 2});

  auto neg = qrels_of("201 0 d7 -2\n");
  CHECK(neg.judgments()[0].grade == 0);

  auto dup = qrels_of("201 0 d7 1\n201 0 d7 3\n");
  REQUIRE(dup.size() == 1);
  CHECK(dup.judgments()[0].grade == 3);
}

TEST_CASE("qrels errors carry line numbers") {
  CHECK(error_line([] { qrels_of("201 0 d7 2\n201 0 d8 high\n"); }) == 2);
  CHECK(error_line([] { qrels_of("201 0 d7\n"); }) == 1);
  CHECK(error_line([] { qrels_of("201 0 d7 1 extra\n"); }) == 1);
}

TEST_CASE("doc map conflicts are rejected and resources materialize") {
  const auto m = doc_map_of("d1\tR1\n");
  REQUIRE(m.resource_of("d1") != nullptr);
  CHECK(*m.resource_of("d1") == "R1");
  CHECK(m.resource_of("d9") == nullptr);

  CHECK(error_line([] { doc_map_of("d1\tR1\nd1\tR2\n"); }) == 2);

  const auto three = doc_map_of("d1\tR1\nd2\tR2\nd3\tR1\n");
  const auto rs = three.resources();
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].resource_id == "R1");
  CHECK(rs[0].doc_ids == std::vector<std::string>{"d1", "d3"});
  CHECK(rs[1].doc_ids == std::vector<std::string>{"d2"});
}

TEST_CASE("qrels round trip through serialization") {
  Rng rng(11);
  std::vector<Judgment> raw;
  for (int i = 0; i < 200; ++i) {
    raw.push_back({"q" + std::to_string(rng.below(7)), "d" + std::to_string(rng.below(40)),
                   static_cast<int>(rng.below(6)) - 2});
  }
  const JudgmentSet set(raw);
  for (const auto& j : set.judgments()) CHECK(j.grade >= 0);
  const auto again = qrels_of(serialize_qrels(set));
  CHECK(again == set);
}

TEST_CASE("top documents: summed grades, descending, ties by id") {
  auto judgments = qrels_of(
      "q1 0 d1 3\n"
      "q2 0 d1 2\n"
      "q1 0 d2 4\n"
      "q2 0 d3 1\n");
  auto dm = doc_map_of("d1\tR1\nd2\tR1\nd3\tR1\n");
  judgments.resolve(dm);
  const auto top = select_top_documents(judgments, dm, 2);
  CHECK(top.per_resource.at("R1") == std::vector<std::string>{"d1", "d2"});

  auto flat = qrels_of("q1 0 dc 1\nq1 0 da 1\nq1 0 db 1\n");
  auto dm2 = doc_map_of("da\tR\ndb\tR\ndc\tR\n");
  flat.resolve(dm2);
  CHECK(select_top_documents(flat, dm2, 10).per_resource.at("R") ==
        std::vector<std::string>{"da", "db", "dc"});
}

TEST_CASE("top documents agree with an exhaustive sort and never cross resources") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    DocMap dm;
    const std::size_t docs = 1 + rng.below(20);
    for (std::size_t d = 0; d < docs; ++d) {
      dm.add("d" + std::to_string(d), "R" + std::to_string(rng.below(3)));
    }
    std::vector<Judgment> raw;
    for (int i = 0; i < 30; ++i) {
      raw.push_back({"q" + std::to_string(rng.below(4)), "d" + std::to_string(rng.below(docs)),
                     static_cast<int>(rng.below(4))});
    }
    JudgmentSet js(raw);
    js.resolve(dm);
    const std::size_t n = 1 + rng.below(6);
    const auto top = select_top_documents(js, dm, n);

    std::map<std::string, int> score;
    for (const auto& j : js.judgments()) score[j.doc_id] += j.grade;
    std::set<std::string> seen;
    for (const auto& [rid, list] : top.per_resource) {
      std::vector<std::string> judged;
      for (const auto& [doc, s] : score) {
        if (*dm.resource_of(doc) == rid) judged.push_back(doc);
      }
      std::sort(judged.begin(), judged.end(), [&](const auto& a, const auto& b) {
        return score[a] != score[b] ? score[a] > score[b] : a < b;
      });
      if (judged.size() > n) judged.resize(n);
      CHECK(list == judged);
      for (const auto& doc : list) {
        CHECK(*dm.resource_of(doc) == rid);
        CHECK(seen.insert(doc).second);
      }
    }
  }
}

TEST_CASE("top documents can be restricted to training queries") {
  auto js = qrels_of("q1 0 d1 1\nq2 0 d2 3\n");
  auto dm = doc_map_of("d1\tR\nd2\tR\n");
  js.resolve(dm);
  const std::set<std::string> only{"q1"};
  CHECK(select_top_documents(js, dm, 10, &only).per_resource.at("R") ==
        std::vector<std::string>{"d1"});
  CHECK(select_top_documents(js, dm, 10).per_resource.at("R") ==
        std::vector<std::string>{"d2", "d1"});
}

TEST_CASE("unjudged resources are reported") {
  auto js = qrels_of("q1 0 d1 1\n");
  auto dm = doc_map_of("d1\tR1\nd2\tR2\n");
  js.resolve(dm);
  const auto top = select_top_documents(js, dm, 10);
  CHECK(top.per_resource.at("R2").empty());
  CHECK(top.unjudged_resources == std::vector<std::string>{"R2"});
}

TEST_CASE("dataset stats on the FedWeb14-shaped fixture") {
  const auto corpus = synthetic::generate("fedweb14", 1);
  const auto m = dataset_stats(corpus.dataset);
  CHECK(m.resources == 149);
  CHECK(m.queries == 50);
  CHECK(m.digest.size() == 16);
  CHECK(dataset_stats(corpus.dataset).digest == m.digest);

  const auto empty = dataset_stats(Dataset{});
  CHECK(empty.queries == 0);
  CHECK(empty.documents == 0);
  CHECK(empty.resources == 0);
  CHECK(empty.judgments == 0);
}

TEST_CASE("dataset validation catches cross-file problems") {
  Dataset ds;
  ds.queries = queries_of("q1\tx\n");
  ds.doc_map = doc_map_of("d1\tR\n");
  ds.judgments = qrels_of("q2 0 d1 1\n");
  CHECK_THROWS_AS(ds.validate(), ValidationError);

  ds.judgments = qrels_of("q1 0 d9 1\n");
  CHECK_THROWS_AS(ds.validate(), ValidationError);

  ds.judgments = qrels_of("q1 0 d1 1\n");
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("datasets save and load unchanged") {
  const auto corpus = synthetic::generate("topic", 2);
  const auto dir = test::scratch_dir("corpus_roundtrip");
  const auto manifest = dataset_stats(corpus.dataset);
  save_dataset(corpus.dataset, dir, manifest);
  const auto back = load_dataset(dir);
  CHECK(back.judgments == corpus.dataset.judgments);
  CHECK(back.doc_map.entries() == corpus.dataset.doc_map.entries());
  CHECK(dataset_stats(back) == manifest);
}

TEST_CASE("source files report path and line") {
  const auto dir = test::scratch_dir("corpus_sources");
  std::ofstream(dir / "q.tsv") << "q1\ta\nq1\tb\n";
  std::ofstream(dir / "qrels.txt") << "q1 0 d1 1\n";
  std::ofstream(dir / "dm.tsv") << "d1\tR\n";
  try {
    load_sources(dir / "q.tsv", dir / "qrels.txt", dir / "dm.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("q.tsv:2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_sources(dir / "missing.tsv", dir / "qrels.txt", dir / "dm.tsv"),
                  ValidationError);
}
