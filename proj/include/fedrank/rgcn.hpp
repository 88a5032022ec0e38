#pragma once

// Relational graph convolution over the query/resource graph:
//
//   H'_i = act( sum_r agg_{j in N_r(i)} E_r(i,j) * (H_j W_r)  +  H_i W_0 )
//
// with r in {qr, rr}. Edges are undirected, so every edge delivers a message
// in both directions under the same W_r. With the sum aggregator this is
// exactly the weighted relational sum; mean and max are available as well.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedrank/graph.hpp"
#include "fedrank/metrics.hpp"
#include "fedrank/tensor.hpp"

namespace fedrank::rgcn {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, identity = 2 };

const char* to_string(Activation a);
const char* to_string(tensor::Aggregator a);
Activation parse_activation(const std::string& s);
tensor::Aggregator parse_aggregator(const std::string& s);

struct RgcnConfig {
  std::size_t input_dim = 768;
  std::size_t hidden_dim = 768;
  std::size_t output_dim = 768;
  std::size_t num_layers = 2;
  Activation activation = Activation::relu;
  tensor::Aggregator aggregator = tensor::Aggregator::sum;
  double dropout_p = 0.0;  // applied after every layer except the last

  // (d_in, d_out) of each layer.
  std::vector<std::pair<std::size_t, std::size_t>> layer_dims() const;
  // Throws UsageError for zero dims, dropout outside [0, 1), or a 0-layer
  // model whose output dim differs from its input dim.
  void validate() const;
  friend bool operator==(const RgcnConfig&, const RgcnConfig&) = default;
};

struct LayerParams {
  tensor::Parameter w_qr;
  tensor::Parameter w_rr;
  tensor::Parameter w_self;
};

struct RgcnModel {
  RgcnConfig config;
  std::vector<LayerParams> layers;

  std::vector<tensor::Parameter*> parameters();
  std::vector<const tensor::Parameter*> parameters() const;
  // FNV-1a digest of all parameter bytes.
  std::uint64_t digest() const;
};

// Glorot-uniform weights in +-sqrt(6 / (d_in + d_out)), deterministic in seed.
RgcnModel init_params(const RgcnConfig& config, std::uint64_t seed);

// Per-relation message lists with both directions of every edge.
struct GraphMessages {
  std::size_t node_count = 0;
  std::vector<tensor::Message> qr;
  std::vector<tensor::Message> rr;
};

GraphMessages make_messages(const graph::HeteroGraph& g);

tensor::Var layer_forward(tensor::Tape& tape, const GraphMessages& messages,
                          tensor::Var h, LayerParams& params,
                          tensor::Aggregator aggregator, Activation activation);

// Layers in order; dropout between layers when training. Per-layer dropout
// masks derive from `seed`.
tensor::Var model_forward(tensor::Tape& tape, const GraphMessages& messages,
                          tensor::Var h0, RgcnModel& model, bool training,
                          std::uint64_t seed);

// Evaluation-mode forward over the graph's own features; parameters enter the
// tape as constants.
tensor::Tensor infer(const graph::HeteroGraph& g, const RgcnModel& model);
tensor::Tensor layer_forward(const graph::HeteroGraph& g, const tensor::Tensor& h,
                             const LayerParams& params, tensor::Aggregator aggregator,
                             Activation activation);

// Cosine of the query row against each resource row, ranked descending with
// ties by ascending resource id. Throws ValidationError for bad node ids.
metrics::RankedList predict(const tensor::Tensor& final_features,
                            const graph::HeteroGraph& g, std::uint32_t query_node,
                            std::span<const std::uint32_t> resource_nodes);

// Builds the inference graph for one query vector and ranks every stored
// resource.
metrics::RankedList rank_resources(const RgcnModel& model,
                                   std::span<const double> query_vector,
                                   const embedding::EmbeddingStore& resource_store,
                                   const graph::GraphConfig& graph_config);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  double loss = 0.0;
  graph::GraphConfig graph;  // build config needed to rebuild inference graphs
  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  RgcnModel model;
  CheckpointMeta meta;
};

// "FEDCKPT1" | u32 version | config | metadata | u32 tensor count |
// (u16 name, u32 rows, u32 cols, f64 data)... | u64 FNV-1a digest
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fedrank::rgcn
