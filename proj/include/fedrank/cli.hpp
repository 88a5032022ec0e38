#pragma once

// The fedrank command-line tool. run_cli is the whole program minus process
// setup, so tests can drive it in-process.

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "fedrank/corpus.hpp"
#include "fedrank/embedding.hpp"
#include "fedrank/training.hpp"

namespace fedrank::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr const char* kQueryStoreFile = "queries.emb";
inline constexpr const char* kDocStoreFile = "docs.emb";

struct SweepRow {
  double lambda = 0.0;
  std::size_t rr_edges = 0;  // in the graph over all judged queries
  double ndcg10 = 0.0;       // cross-validated FedGNN means
  double np10 = 0.0;
};

// from, from + step, ..., to (inclusive, tolerant of rounding in the step).
std::vector<double> lambda_grid(double from, double to, double step);

std::vector<SweepRow> sweep_lambda(const corpus::Dataset& dataset,
                                   const embedding::EmbeddingStore& query_store,
                                   const embedding::EmbeddingStore& doc_store,
                                   const training::TrainConfig& config,
                                   const std::vector<double>& lambdas);

// `lambda<TAB>rr_edges<TAB>ndcg@10<TAB>np@10` with a header.
std::string sweep_tsv(const std::vector<SweepRow>& rows);

}  // namespace fedrank::cli
