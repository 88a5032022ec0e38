#include "fedrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fedrank/error.hpp"
#include "fedrank/random.hpp"

namespace fedrank::synthetic {

namespace {

std::string pad(const std::string& prefix, std::size_t i, int width) {
  std::string n = std::to_string(i);
  if (static_cast<int>(n.size()) < width) n.insert(0, width - n.size(), '0');
  return prefix + n;
}

embedding::EmbeddingVector normalized(embedding::EmbeddingVector v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

embedding::EmbeddingVector nonneg_vector(Rng& rng, std::size_t dim) {
  embedding::EmbeddingVector v(dim);
  for (double& x : v) x = rng.uniform();
  return normalized(std::move(v));
}

SyntheticCorpus finish(corpus::Dataset dataset, embedding::EmbeddingStore queries,
                       embedding::EmbeddingStore documents) {
  dataset.validate();
  SyntheticCorpus c;
  c.dataset = std::move(dataset);
  c.queries = std::move(queries);
  c.documents = std::move(documents);
  return c;
}

}  // namespace

SyntheticCorpus overfit_fixture(std::size_t dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "overfit"));
  corpus::Dataset ds;
  embedding::EmbeddingStore qs(dim, embedding::StoreKind::query);
  embedding::EmbeddingStore docs(dim, embedding::StoreKind::document);
  std::vector<corpus::Judgment> judgments;
  constexpr std::size_t kResources = 5;
  constexpr std::size_t kQueries = 4;

  for (std::size_t r = 0; r < kResources; ++r) {
    for (std::size_t d = 0; d < 2; ++d) {
      const std::string doc = "R" + std::to_string(r) + "-d" + std::to_string(d);
      ds.doc_map.add(doc, "R" + std::to_string(r));
      docs.add(doc, std::span<const double>(nonneg_vector(rng, dim)));
    }
  }
  for (std::size_t q = 0; q < kQueries; ++q) {
    const std::string qid = "q" + std::to_string(q);
    ds.queries.push_back({qid, "overfit query " + std::to_string(q)});
    qs.add(qid, std::span<const double>(nonneg_vector(rng, dim)));
    // Only q0 reaches the global maximum. A target of exactly 1 forces the
    // two embeddings to be parallel; if every query had one, the rows would
    // constrain each other and the targets could not all be met.
    std::vector<int> sums{1, 2, 3, 4, q == 0 ? 6 : 5};
    rng.shuffle(sums);
    for (std::size_t r = 0; r < kResources; ++r) {
      const int first = std::min(sums[r], 3);
      const std::string base = "R" + std::to_string(r) + "-d";
      judgments.push_back({qid, base + "0", first});
      judgments.push_back({qid, base + "1", sums[r] - first});
    }
  }
  ds.judgments = corpus::JudgmentSet(std::move(judgments));
  return finish(std::move(ds), std::move(qs), std::move(docs));
}

SyntheticCorpus shaped_fixture(std::size_t resources, std::size_t queries,
                               std::size_t qr_pairs, std::size_t dim, std::uint64_t seed) {
  if (qr_pairs < std::max(resources, queries) || qr_pairs > resources * queries) {
    throw UsageError("cannot place " + std::to_string(qr_pairs) + " pairs on " +
                     std::to_string(queries) + " x " + std::to_string(resources));
  }
  Rng rng(derive_seed(seed, "shaped"));
  corpus::Dataset ds;
  embedding::EmbeddingStore qs(dim, embedding::StoreKind::query);
  embedding::EmbeddingStore docs(dim, embedding::StoreKind::document);

  // Cover every query and every resource first, then fill with random
  // distinct pairs.
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < std::max(resources, queries); ++i) {
    pairs.emplace(i % queries, i % resources);
  }
  while (pairs.size() < qr_pairs) pairs.emplace(rng.below(queries), rng.below(resources));

  const int qw = static_cast<int>(std::to_string(queries).size());
  const int rw = static_cast<int>(std::to_string(resources).size());
  for (std::size_t q = 0; q < queries; ++q) {
    const std::string qid = pad("q", q, qw);
    ds.queries.push_back({qid, "shaped query " + std::to_string(q)});
    qs.add(qid, std::span<const double>(nonneg_vector(rng, dim)));
  }
  std::vector<corpus::Judgment> judgments;
  std::vector<std::size_t> docs_in(resources, 0);
  auto new_doc = [&](std::size_t r) {
    const std::string doc = pad("R", r, rw) + "-d" + std::to_string(docs_in[r]++);
    ds.doc_map.add(doc, pad("R", r, rw));
    docs.add(doc, std::span<const double>(nonneg_vector(rng, dim)));
    return doc;
  };
  for (const auto& [q, r] : pairs) {
    judgments.push_back({pad("q", q, qw), new_doc(r), 1 + static_cast<int>(rng.below(3))});
  }
  // Grade-0 judgments on pairs without positive mass: they must not create
  // qr edges.
  for (std::size_t q = 0; q < queries; ++q) {
    const std::size_t r = rng.below(resources);
    if (pairs.contains({q, r})) continue;
    judgments.push_back({pad("q", q, qw), new_doc(r), 0});
  }
  ds.judgments = corpus::JudgmentSet(std::move(judgments));
  return finish(std::move(ds), std::move(qs), std::move(docs));
}

SyntheticCorpus topic_corpus(const TopicSpec& spec, std::uint64_t seed) {
  if (spec.clusters == 0 || spec.resources_per_cluster == 0 || spec.queries == 0 ||
      spec.docs_per_resource == 0 || spec.dim < spec.clusters) {
    throw UsageError("degenerate topic corpus specification");
  }
  Rng rng(derive_seed(seed, "topic"));
  const std::size_t dim = spec.dim;
  const std::size_t block = dim / spec.clusters;

  // Each topic owns a block of dimensions and shares a weak background.
  std::vector<embedding::EmbeddingVector> topics(spec.clusters,
                                                 embedding::EmbeddingVector(dim));
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t i = 0; i < dim; ++i) {
      const bool own = i / block == c;
      topics[c][i] = own ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.15);
    }
  }
  auto noisy = [&](const embedding::EmbeddingVector& t, double noise) {
    embedding::EmbeddingVector v = normalized(t);
    for (double& x : v) x += noise * rng.normal();
    return normalized(std::move(v));
  };

  corpus::Dataset ds;
  embedding::EmbeddingStore qs(dim, embedding::StoreKind::query);
  embedding::EmbeddingStore docs(dim, embedding::StoreKind::document);
  const std::size_t n_res = spec.clusters * spec.resources_per_cluster;
  const int rw = static_cast<int>(std::to_string(n_res).size());
  std::vector<std::vector<std::string>> members(n_res);
  std::vector<std::size_t> quality(n_res);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::vector<std::size_t> levels(spec.resources_per_cluster);
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = i;
    rng.shuffle(levels);
    for (std::size_t k = 0; k < spec.resources_per_cluster; ++k) {
      const std::size_t r = c * spec.resources_per_cluster + k;
      quality[r] = levels[k];
      const std::string rid = pad("R", r, rw);
      for (std::size_t d = 0; d < spec.docs_per_resource; ++d) {
        const std::string doc = rid + "-d" + pad("", d, 2);
        ds.doc_map.add(doc, rid);
        docs.add(doc, std::span<const double>(noisy(topics[c], spec.doc_noise)));
        members[r].push_back(doc);
      }
    }
  }

  std::vector<corpus::Judgment> judgments;
  const int qw = static_cast<int>(std::to_string(spec.queries).size());
  for (std::size_t q = 0; q < spec.queries; ++q) {
    const std::size_t c = q % spec.clusters;
    const std::string qid = pad("q", q, qw);
    ds.queries.push_back({qid, "topic " + std::to_string(c) + " query " + std::to_string(q)});
    qs.add(qid, std::span<const double>(noisy(topics[c], spec.query_noise)));
    for (std::size_t k = 0; k < spec.resources_per_cluster; ++k) {
      const std::size_t r = c * spec.resources_per_cluster + k;
      // Higher quality: more relevant documents and higher grades.
      const std::size_t relevant =
          std::min(spec.docs_per_resource, 1 + 2 * quality[r] + rng.below(2));
      auto pool = members[r];
      rng.shuffle(pool);
      for (std::size_t i = 0; i < relevant; ++i) {
        const int grade = 1 + static_cast<int>(rng.below(1 + quality[r] / 2));
        judgments.push_back({qid, pool[i], grade});
      }
    }
    // Outside the topic: now and then a marginally relevant document,
    // otherwise a judged non-relevant one.
    for (std::size_t r = 0; r < n_res; ++r) {
      if (r / spec.resources_per_cluster == c) continue;
      const int grade = rng.bernoulli(spec.offtopic_rate) ? 1 : 0;
      judgments.push_back({qid, members[r][rng.below(spec.docs_per_resource)], grade});
    }
  }
  ds.judgments = corpus::JudgmentSet(std::move(judgments));
  return finish(std::move(ds), std::move(qs), std::move(docs));
}

SyntheticCorpus generate(const std::string& kind, std::uint64_t seed) {
  if (kind == "overfit") return overfit_fixture(16, seed);
  if (kind == "topic") return topic_corpus(TopicSpec{}, seed);
  if (kind == "fedweb14") return shaped_fixture(149, 50, 4286, 16, seed);
  if (kind == "clueweb") return shaped_fixture(123, 200, 4046, 16, seed);
  throw UsageError("unknown generator '" + kind +
                   "' (expected overfit, topic, fedweb14 or clueweb)");
}

}  // namespace fedrank::synthetic
