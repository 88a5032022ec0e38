#pragma once

// Generated corpora with known structure. They carry their own embeddings,
// so every experiment here runs without an external text encoder.

#include <cstddef>
#include <cstdint>
#include <string>

#include "fedrank/corpus.hpp"
#include "fedrank/embedding.hpp"

namespace fedrank::synthetic {

struct SyntheticCorpus {
  corpus::Dataset dataset;  // validated
  embedding::EmbeddingStore queries{1, embedding::StoreKind::query};
  embedding::EmbeddingStore documents{1, embedding::StoreKind::document};
};

// 5 resources, 4 queries. Every (query, resource) pair is judged and the
// five resource sums of each query are distinct: a permutation of 1..5, or
// of {1, 2, 3, 4, 6} for q0, which holds the unique global maximum.
SyntheticCorpus overfit_fixture(std::size_t dim = 16, std::uint64_t seed = 1);

// Exactly `qr_pairs` positive (query, resource) pairs spread over the given
// counts, one judged document per pair plus some grade-0 noise judgments.
// Document vectors are non-negative, so every resource pair has cosine >= 0.
SyntheticCorpus shaped_fixture(std::size_t resources, std::size_t queries,
                               std::size_t qr_pairs, std::size_t dim, std::uint64_t seed);

struct TopicSpec {
  std::size_t clusters = 4;
  std::size_t resources_per_cluster = 5;
  std::size_t queries = 40;
  std::size_t docs_per_resource = 12;
  std::size_t dim = 32;
  double doc_noise = 0.1;    // per-dimension Gaussian noise before renormalizing
  double query_noise = 0.1;
  double offtopic_rate = 0.3;  // chance of a grade-1 document outside the topic
};

// Topic clusters of resources. A query about topic c has relevant documents
// only in cluster c; how many depends on a per-resource quality level that
// the embeddings do not reveal.
SyntheticCorpus topic_corpus(const TopicSpec& spec, std::uint64_t seed);

// Generator names accepted by the CLI: overfit, topic, fedweb14, clueweb.
SyntheticCorpus generate(const std::string& kind, std::uint64_t seed);

}  // namespace fedrank::synthetic
