#pragma once

// Pointwise training, k-fold cross-validation and the embedding-only
// baselines used for ablation.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedrank/corpus.hpp"
#include "fedrank/embedding.hpp"
#include "fedrank/graph.hpp"
#include "fedrank/metrics.hpp"
#include "fedrank/rgcn.hpp"
#include "fedrank/tensor.hpp"

namespace fedrank::training {

// Weight given to the qr edges of an unseen query at ranking time. `mean`
// uses the average training target of the fold.
enum class InferenceQr { unit, mean };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double dropout_p = 0.0;
  double lambda = 0.0;
  std::size_t top_n = 10;
  std::size_t folds = 5;
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 0;  // 0: same as the input dim
  std::size_t output_dim = 0;  // 0: same as the input dim
  rgcn::Activation activation = rgcn::Activation::relu;
  tensor::Aggregator aggregator = tensor::Aggregator::sum;
  tensor::Reduction reduction = tensor::Reduction::sum;
  graph::AlphaMode alpha_mode = graph::AlphaMode::auto_max;
  double alpha = 1.0;          // used when alpha_mode is fixed
  InferenceQr inference_qr = InferenceQr::unit;
  std::size_t patience = 0;    // epochs without improvement before stopping; 0 disables
  std::vector<metrics::MetricSpec> metrics = metrics::default_metrics();
  metrics::Gain gain = metrics::Gain::exponential;

  void validate() const;
  rgcn::RgcnConfig model_config(std::size_t input_dim) const;
  graph::GraphConfig graph_config() const;
  // `key = value` lines, one per field, in a fixed order.
  std::string to_manifest() const;
};

struct FoldSplit {
  std::vector<std::vector<std::string>> folds;

  // Every query not in fold `i`, ascending.
  std::vector<std::string> training_queries(std::size_t i) const;
};

// Shuffles the ids with a seed-derived stream and deals them round-robin
// into k folds. Throws UsageError when k < 2 or k exceeds the query count.
FoldSplit kfold_split(std::vector<std::string> query_ids, std::size_t k,
                      std::uint64_t seed);

struct TrainReport {
  std::vector<double> losses;  // loss of each epoch's forward pass
  double wall_clock_seconds = 0.0;
  std::string config_echo;

  double final_loss() const { return losses.empty() ? 0.0 : losses.back(); }
  // `epoch<TAB>loss` rows with a header.
  std::string loss_tsv() const;
};

// Full-batch training: each epoch runs the forward pass on the graph, sums
// (target - cosine(query, resource))^2 over the target pairs, backpropagates
// and takes one Adam step. Throws NumericError on a non-finite loss and
// ValidationError when a target pair is missing from the graph.
TrainReport train(const graph::HeteroGraph& g, const graph::QrWeightTable& targets,
                  rgcn::RgcnModel& model, const TrainConfig& config);

// Training loss of `model` on the graph without updating it.
double evaluate_loss(const graph::HeteroGraph& g, const graph::QrWeightTable& targets,
                     const rgcn::RgcnModel& model, tensor::Reduction reduction);

// Resources ranked by raw cosine(query, resource embedding).
metrics::RankedList fedbert_baseline(std::span<const double> query_vector,
                                     const embedding::EmbeddingStore& resource_store);

// Uniformly random order of the stored resources.
metrics::RankedList random_baseline(const embedding::EmbeddingStore& resource_store,
                                    std::uint64_t seed);

enum class Method { fedgnn, fedbert, random };
const char* to_string(Method m);

// Everything needed to train on a query subset.
struct PreparedFold {
  std::vector<std::string> train_queries;
  embedding::ResourceStoreBuild resources;
  graph::QrWeightTable targets;
  graph::GraphConfig graph_config;
  graph::HeteroGraph graph;
};

// Top-N documents, resource embeddings, alpha, qr targets and the training
// graph, all derived from `train_queries` only.
PreparedFold prepare_training(const corpus::Dataset& dataset,
                              const embedding::EmbeddingStore& query_store,
                              const embedding::EmbeddingStore& doc_store,
                              const std::vector<std::string>& train_queries,
                              const TrainConfig& config);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> train_queries;
  std::vector<std::string> test_queries;
  graph::GraphStats graph_stats;
  TrainReport report;
  rgcn::Checkpoint checkpoint;
  embedding::EmbeddingStore resource_store{1, embedding::StoreKind::resource};
  std::map<Method, std::vector<metrics::MetricReport>> metrics;
};

struct CvOptions {
  bool baselines = true;  // also score fedbert and random on each fold
};

struct CvReport {
  std::vector<FoldResult> folds;
  // method -> one entry per configured metric: arithmetic mean over folds of
  // the per-fold mean.
  std::map<Method, std::vector<std::pair<metrics::MetricSpec, double>>> averaged;

  double mean(Method m, const metrics::MetricSpec& spec) const;
  // `method<TAB>metric<TAB>fold<TAB>value` rows, fold "mean" for averages.
  std::string to_tsv() const;
};

// k-fold protocol over the judged queries: per fold, train from scratch on
// the training folds and rank every resource for each test query through
// the inference graph. Throws ValidationError if a fold leaks test queries
// into its training graph.
CvReport cross_validate(const corpus::Dataset& dataset,
                        const embedding::EmbeddingStore& query_store,
                        const embedding::EmbeddingStore& doc_store,
                        const TrainConfig& config, const CvOptions& options = {});

}  // namespace fedrank::training
