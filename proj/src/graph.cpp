#include "fedrank/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>

#include "fedrank/binary_io.hpp"
#include "fedrank/error.hpp"

namespace fedrank::graph {

const char* to_string(NodeType t) {
  return t == NodeType::query ? "query" : "resource";
}

const char* to_string(Relation r) { return r == Relation::qr ? "qr" : "rr"; }

void GraphConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw UsageError("lambda must lie in [0, 1]");
  }
  if (alpha_mode == AlphaMode::fixed && !(alpha > 0.0)) {
    throw UsageError("fixed alpha must be positive");
  }
  if (top_n == 0) throw UsageError("top_n must be at least 1");
  if (!(inference_qr_weight > 0.0 && std::isfinite(inference_qr_weight))) {
    throw UsageError("inference qr weight must be positive");
  }
}

// ---- HeteroGraph ----------------------------------------------------------

HeteroGraph::HeteroGraph(std::size_t dim, GraphConfig config)
    : dim_(dim), config_(config) {
  if (dim == 0) throw ValidationError("graph feature dimension must be positive");
  config_.validate();
}

std::uint32_t HeteroGraph::add_node(const std::string& id, NodeType type,
                                    std::span<const double> features) {
  if (features.size() != dim_) {
    throw ValidationError(std::string(to_string(type)) + " node " + id +
                          " has feature dim " + std::to_string(features.size()) +
                          ", graph dim is " + std::to_string(dim_));
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw NumericError("non-finite feature on node " + id);
  }
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  if (!index_.emplace(std::pair(type, id), index).second) {
    throw ValidationError("duplicate " + std::string(to_string(type)) + " node " + id);
  }
  nodes_.push_back({id, type});
  features_.insert(features_.end(), features.begin(), features.end());
  return index;
}

void HeteroGraph::add_edge(std::uint32_t a, std::uint32_t b, Relation relation,
                           double weight) {
  if (a >= nodes_.size() || b >= nodes_.size()) {
    throw ValidationError("edge endpoint out of range");
  }
  if (!std::isfinite(weight)) throw NumericError("non-finite edge weight");
  const NodeType ta = nodes_[a].type, tb = nodes_[b].type;
  if (relation == Relation::qr) {
    if (ta == tb) {
      throw ValidationError("qr edge must join a query and a resource");
    }
    if (ta == NodeType::resource) std::swap(a, b);
  } else {
    if (ta != NodeType::resource || tb != NodeType::resource) {
      throw ValidationError("rr edge must join two resources");
    }
    if (a == b) throw ValidationError("rr self loop on " + nodes_[a].id);
    if (weight < config_.lambda) {
      throw ValidationError("rr edge weight below lambda");
    }
    if (a > b) std::swap(a, b);
  }
  edges_.push_back({a, b, relation, weight});
}

void HeteroGraph::canonicalize() {
  std::sort(edges_.begin(), edges_.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.relation, x.src, x.dst) < std::tie(y.relation, y.src, y.dst);
  });
}

tensor::Tensor HeteroGraph::features() const {
  return tensor::Tensor(nodes_.size(), dim_, features_);
}

std::span<const double> HeteroGraph::feature(std::uint32_t node) const {
  return std::span<const double>(features_).subspan(node * dim_, dim_);
}

std::optional<std::uint32_t> HeteroGraph::find(NodeType type,
                                               const std::string& id) const {
  auto it = index_.find({type, id});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint32_t> HeteroGraph::nodes_of(NodeType type) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].type == type) out.push_back(i);
  }
  return out;
}

// ---- edge weights ---------------------------------------------------------

namespace {

std::map<corpus::PairKey, long long> pair_sums(const corpus::JudgmentSet& judgments) {
  std::map<corpus::PairKey, long long> sums;
  for (const auto& [key, indices] : judgments.coverage()) {
    long long s = 0;
    for (std::size_t i : indices) s += judgments.judgments()[i].grade;
    sums[key] = s;
  }
  return sums;
}

}  // namespace

double compute_alpha(const corpus::JudgmentSet& judgments) {
  long long best = 0;
  for (const auto& [key, s] : pair_sums(judgments)) best = std::max(best, s);
  if (best <= 0) {
    throw ValidationError(
        "all judgment grades are zero: auto alpha is undefined, use a fixed alpha");
  }
  return 1.0 / static_cast<double>(best);
}

QrWeightTable qr_weights(const corpus::JudgmentSet& judgments, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw UsageError("alpha must be a positive finite number");
  }
  QrWeightTable table;
  for (const auto& [key, s] : pair_sums(judgments)) {
    if (s > 0) table[key] = alpha * static_cast<double>(s);
  }
  return table;
}

std::vector<RrEdge> rr_edges(std::span<const embedding::ResourceEmbedding> resources,
                             double lambda) {
  std::vector<RrEdge> out;
  for (std::size_t i = 0; i < resources.size(); ++i) {
    for (std::size_t j = i + 1; j < resources.size(); ++j) {
      const double w = embedding::cosine(std::span<const double>(resources[i].vector),
                                         std::span<const double>(resources[j].vector));
      if (w >= lambda) {
        out.push_back({resources[i].resource_id, resources[j].resource_id, w});
      }
    }
  }
  return out;
}

std::vector<RrEdge> rr_edges(const embedding::EmbeddingStore& resources,
                             double lambda) {
  std::vector<embedding::ResourceEmbedding> list;
  list.reserve(resources.size());
  for (const auto& id : resources.ids()) {
    list.push_back({id, resources.get(id), {}, false});
  }
  return rr_edges(list, lambda);
}

// ---- construction ---------------------------------------------------------

namespace {

// Adds every stored resource (ascending id) and the rr edges among them.
void add_resources(HeteroGraph& g, const embedding::EmbeddingStore& resource_store) {
  std::vector<std::string> ids = resource_store.ids();
  std::sort(ids.begin(), ids.end());
  std::vector<embedding::ResourceEmbedding> list;
  list.reserve(ids.size());
  for (const auto& id : ids) {
    list.push_back({id, resource_store.get(id), {}, false});
    g.add_node(id, NodeType::resource, list.back().vector);
  }
  for (const auto& e : rr_edges(list, g.config().lambda)) {
    g.add_edge(*g.find(NodeType::resource, e.first),
               *g.find(NodeType::resource, e.second), Relation::rr, e.weight);
  }
}

}  // namespace

HeteroGraph build_training_graph(const std::vector<std::string>& query_ids,
                                 const embedding::EmbeddingStore& query_store,
                                 const embedding::EmbeddingStore& resource_store,
                                 const QrWeightTable& qr_table,
                                 const GraphConfig& config) {
  if (query_store.dim() != resource_store.dim()) {
    throw ValidationError("query and resource embeddings differ in dimension");
  }
  HeteroGraph g(resource_store.dim(), config);
  std::vector<std::string> queries = query_ids;
  std::sort(queries.begin(), queries.end());
  queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
  for (const auto& q : queries) {
    if (!query_store.contains(q)) {
      throw ValidationError("missing feature vector for query " + q);
    }
    g.add_node(q, NodeType::query, query_store.get(q));
  }
  add_resources(g, resource_store);
  for (const auto& [key, weight] : qr_table) {
    auto q = g.find(NodeType::query, key.first);
    auto r = g.find(NodeType::resource, key.second);
    if (!q) throw ValidationError("qr target references unknown query " + key.first);
    if (!r) {
      throw ValidationError("missing feature vector for resource " + key.second);
    }
    g.add_edge(*q, *r, Relation::qr, weight);
  }
  g.canonicalize();
  return g;
}

HeteroGraph build_inference_graph(const std::string& query_id,
                                  std::span<const double> query_vector,
                                  const embedding::EmbeddingStore& resource_store,
                                  const GraphConfig& config) {
  if (resource_store.empty()) throw ValidationError("resource store is empty");
  if (query_vector.size() != resource_store.dim()) {
    throw ValidationError("query vector dim " + std::to_string(query_vector.size()) +
                          " does not match resource store dim " +
                          std::to_string(resource_store.dim()));
  }
  HeteroGraph g(resource_store.dim(), config);
  const std::uint32_t q = g.add_node(query_id, NodeType::query, query_vector);
  add_resources(g, resource_store);
  for (std::uint32_t r : g.nodes_of(NodeType::resource)) {
    g.add_edge(q, r, Relation::qr, g.config().inference_qr_weight);
  }
  g.canonicalize();
  return g;
}

// ---- statistics -----------------------------------------------------------

std::string GraphStats::to_table() const {
  return "resource_nodes\tquery_nodes\tqr_edges\trr_edges\n" +
         std::to_string(resource_nodes) + "\t" + std::to_string(query_nodes) +
         "\t" + std::to_string(qr_edges) + "\t" + std::to_string(rr_edges) + "\n";
}

GraphStats graph_stats(const HeteroGraph& g) {
  GraphStats s;
  for (const auto& n : g.nodes()) {
    (n.type == NodeType::query ? s.query_nodes : s.resource_nodes)++;
  }
  for (const auto& e : g.edges()) {
    (e.relation == Relation::qr ? s.qr_edges : s.rr_edges)++;
  }
  return s;
}

// ---- file format ----------------------------------------------------------

namespace {
constexpr std::string_view kGraphMagic = "FEDGPH1\n";
}

std::vector<std::uint8_t> encode_graph(const HeteroGraph& g) {
  binio::Writer w;
  w.raw(kGraphMagic);
  w.u32(kGraphVersion);
  w.u32(static_cast<std::uint32_t>(g.dim()));
  w.u32(static_cast<std::uint32_t>(g.node_count()));
  w.u32(static_cast<std::uint32_t>(g.edges().size()));
  const auto& c = g.config();
  w.f64(c.lambda);
  w.u8(static_cast<std::uint8_t>(c.alpha_mode));
  w.f64(c.alpha);
  w.u32(static_cast<std::uint32_t>(c.top_n));
  w.f64(c.inference_qr_weight);
  for (const auto& n : g.nodes()) {
    w.u8(static_cast<std::uint8_t>(n.type));
    w.short_string(n.id);
  }
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    for (double v : g.feature(i)) w.f64(v);
  }
  for (const auto& e : g.edges()) {
    w.u32(e.src);
    w.u32(e.dst);
    w.u8(static_cast<std::uint8_t>(e.relation));
    w.f64(e.weight);
  }
  std::vector<std::uint8_t> out = w.buffer();
  const std::uint64_t checksum = w.digest();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(checksum >> (8 * i)));
  return out;
}

HeteroGraph decode_graph(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kGraphMagic.size() ||
      std::memcmp(bytes.data(), kGraphMagic.data(), kGraphMagic.size()) != 0) {
    throw FormatError("bad magic: not a graph file");
  }
  if (bytes.size() < kGraphMagic.size() + 8) throw FormatError("truncated graph file");
  binio::Reader r(bytes);
  r.take(kGraphMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kGraphVersion) {
    throw FormatError("graph file version " + std::to_string(version) +
                      ", expected " + std::to_string(kGraphVersion));
  }
  const auto body = bytes.first(bytes.size() - 8);
  binio::Reader tail(bytes.last(8));
  if (binio::fnv1a64(body) != tail.u64()) {
    throw FormatError("graph file checksum mismatch");
  }
  binio::Reader br(body);
  br.take(kGraphMagic.size() + 4);
  const std::uint32_t dim = br.u32();
  const std::uint32_t node_count = br.u32();
  const std::uint32_t edge_count = br.u32();
  GraphConfig c;
  c.lambda = br.f64();
  const std::uint8_t mode = br.u8();
  if (mode > 1) throw FormatError("unknown alpha mode " + std::to_string(mode));
  c.alpha_mode = static_cast<AlphaMode>(mode);
  c.alpha = br.f64();
  c.top_n = br.u32();
  c.inference_qr_weight = br.f64();
  try {
    HeteroGraph g(dim, c);
    std::vector<Node> nodes;
    for (std::uint32_t i = 0; i < node_count; ++i) {
      const std::uint8_t t = br.u8();
      if (t > 1) throw FormatError("unknown node type " + std::to_string(t));
      nodes.push_back({br.short_string(), static_cast<NodeType>(t)});
    }
    std::vector<double> features(dim);
    for (const auto& n : nodes) {
      for (auto& v : features) v = br.f64();
      g.add_node(n.id, n.type, features);
    }
    for (std::uint32_t i = 0; i < edge_count; ++i) {
      const std::uint32_t src = br.u32();
      const std::uint32_t dst = br.u32();
      const std::uint8_t rel = br.u8();
      if (rel > 1) throw FormatError("unknown relation " + std::to_string(rel));
      g.add_edge(src, dst, static_cast<Relation>(rel), br.f64());
    }
    if (br.remaining() != 0) throw FormatError("trailing bytes in graph file");
    return g;
  } catch (const ValidationError& e) {
    throw FormatError(std::string("invalid graph content: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("invalid graph config: ") + e.what());
  }
}

void write_graph(const HeteroGraph& g, const std::filesystem::path& path) {
  binio::write_file(path, encode_graph(g));
}

HeteroGraph read_graph(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return decode_graph(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace fedrank::graph
