#pragma once

// Heterogeneous query/resource graph: qr edges weighted by normalized summed
// judgments, rr edges weighted by resource cosine similarity above a
// threshold.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedrank/corpus.hpp"
#include "fedrank/embedding.hpp"
#include "fedrank/tensor.hpp"

namespace fedrank::graph {

enum class NodeType : std::uint8_t { query = 0, resource = 1 };
enum class Relation : std::uint8_t { qr = 0, rr = 1 };

const char* to_string(NodeType t);
const char* to_string(Relation r);

enum class AlphaMode : std::uint8_t { auto_max = 0, fixed = 1 };

struct GraphConfig {
  double lambda = 0.0;
  AlphaMode alpha_mode = AlphaMode::auto_max;
  // The fixed value, or the value resolved by auto-max at build time.
  double alpha = 1.0;
  std::size_t top_n = 10;
  // Weight on the qr edges that join an unseen query to every resource.
  double inference_qr_weight = 1.0;

  // Throws UsageError when lambda is outside [0, 1], alpha <= 0 in fixed
  // mode, top_n == 0,
  // or a non-positive inference_qr_weight.
  void validate() const;
  friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

struct Node {
  std::string id;
  NodeType type = NodeType::query;
  friend bool operator==(const Node&, const Node&) = default;
};

// Undirected edge. For qr, src is the query node; for rr, src < dst.
struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  Relation relation = Relation::qr;
  double weight = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class HeteroGraph {
 public:
  HeteroGraph(std::size_t dim, GraphConfig config);

  // Throws ValidationError on a duplicate (type, id) or wrong feature length.
  std::uint32_t add_node(const std::string& id, NodeType type,
                         std::span<const double> features);
  // Enforces the edge discipline: qr joins one query and one resource, rr
  // joins two distinct resources, weights are finite and rr weights are at
  // least lambda.
  void add_edge(std::uint32_t a, std::uint32_t b, Relation relation, double weight);
  // Sorts edges by (relation, src, dst).
  void canonicalize();

  std::size_t dim() const { return dim_; }
  const GraphConfig& config() const { return config_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  // n x dim initial node features.
  tensor::Tensor features() const;
  std::span<const double> feature(std::uint32_t node) const;

  std::optional<std::uint32_t> find(NodeType type, const std::string& id) const;
  std::vector<std::uint32_t> nodes_of(NodeType type) const;

  friend bool operator==(const HeteroGraph&, const HeteroGraph&) = default;

 private:
  std::size_t dim_;
  GraphConfig config_;
  std::vector<Node> nodes_;
  std::vector<double> features_;
  std::vector<Edge> edges_;
  std::map<std::pair<NodeType, std::string>, std::uint32_t> index_;
};

// (query_id, resource_id) -> normalized relevance; only pairs whose summed
// grade is positive appear.
using QrWeightTable = std::map<corpus::PairKey, double>;

// 1 / max over (query, resource) of the summed grades. Throws
// ValidationError when no positive grade exists.
double compute_alpha(const corpus::JudgmentSet& judgments);

// alpha * summed grades per (query, resource); zero sums are omitted.
QrWeightTable qr_weights(const corpus::JudgmentSet& judgments, double alpha);

struct RrEdge {
  std::string first;
  std::string second;
  double weight = 0.0;
  friend bool operator==(const RrEdge&, const RrEdge&) = default;
};

// Every unordered pair (in input order) whose cosine is >= lambda.
std::vector<RrEdge> rr_edges(std::span<const embedding::ResourceEmbedding> resources,
                             double lambda);
std::vector<RrEdge> rr_edges(const embedding::EmbeddingStore& resources,
                             double lambda);

// One node per listed query and per stored resource (queries first, each
// block in ascending id order), qr edges from the table and rr edges from
// the resource store. `config.alpha` should hold the alpha used for the table.
HeteroGraph build_training_graph(const std::vector<std::string>& query_ids,
                                 const embedding::EmbeddingStore& query_store,
                                 const embedding::EmbeddingStore& resource_store,
                                 const QrWeightTable& qr_table,
                                 const GraphConfig& config);

// A single query node joined to every resource with weight
// config.inference_qr_weight (1 by default), plus the rr
// edges of the stored resources at config.lambda.
HeteroGraph build_inference_graph(const std::string& query_id,
                                  std::span<const double> query_vector,
                                  const embedding::EmbeddingStore& resource_store,
                                  const GraphConfig& config);

struct GraphStats {
  std::size_t query_nodes = 0;
  std::size_t resource_nodes = 0;
  std::size_t qr_edges = 0;
  std::size_t rr_edges = 0;

  // Header plus one row: resource nodes, query nodes, qr edges, rr edges.
  std::string to_table() const;
  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

GraphStats graph_stats(const HeteroGraph& g);

// Versioned binary graph file:
//   "FEDGPH1\n" | u32 version | u32 dim | u32 nodes | u32 edges |
//   config (f64 lambda, u8 alpha mode, f64 alpha, u32 top_n,
//           f64 inference qr weight) |
//   nodes (u8 type, u16 len, id) | features (nodes x dim f64) |
//   edges (u32 src, u32 dst, u8 relation, f64 weight) | u64 FNV-1a checksum
inline constexpr std::uint32_t kGraphVersion = 1;

std::vector<std::uint8_t> encode_graph(const HeteroGraph& g);
HeteroGraph decode_graph(std::span<const std::uint8_t> bytes);
void write_graph(const HeteroGraph& g, const std::filesystem::path& path);
HeteroGraph read_graph(const std::filesystem::path& path);

}  // namespace fedrank::graph
