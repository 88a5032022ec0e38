#include "fedrank/rgcn.hpp"

#include <cmath>
#include <cstring>

#include "fedrank/binary_io.hpp"
#include "fedrank/error.hpp"
#include "fedrank/random.hpp"

namespace fedrank::rgcn {

using tensor::Aggregator;
using tensor::Parameter;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

const char* to_string(Aggregator a) {
  switch (a) {
    case Aggregator::sum: return "sum";
    case Aggregator::mean: return "mean";
    case Aggregator::max: return "max";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity" || s == "none") return Activation::identity;
  throw UsageError("unknown activation " + s);
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "sum") return Aggregator::sum;
  if (s == "mean") return Aggregator::mean;
  if (s == "max" || s == "pool") return Aggregator::max;
  throw UsageError("unknown aggregator " + s);
}

std::vector<std::pair<std::size_t, std::size_t>> RgcnConfig::layer_dims() const {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t in = l == 0 ? input_dim : hidden_dim;
    const std::size_t out = l + 1 == num_layers ? output_dim : hidden_dim;
    dims.emplace_back(in, out);
  }
  return dims;
}

void RgcnConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw UsageError("R-GCN dimensions must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw UsageError("dropout must lie in [0, 1)");
  }
  if (num_layers == 0 && input_dim != output_dim) {
    throw UsageError("a 0-layer model needs output_dim == input_dim");
  }
}

std::vector<Parameter*> RgcnModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers) {
    out.push_back(&l.w_qr);
    out.push_back(&l.w_rr);
    out.push_back(&l.w_self);
  }
  return out;
}

std::vector<const Parameter*> RgcnModel::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers) {
    out.push_back(&l.w_qr);
    out.push_back(&l.w_rr);
    out.push_back(&l.w_self);
  }
  return out;
}

std::uint64_t RgcnModel::digest() const {
  std::uint64_t h = binio::fnv1a64(std::string_view{});
  for (const Parameter* p : parameters()) {
    auto d = p->value.data();
    h = binio::fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(d.data()),
                                 d.size() * sizeof(double)),
                       h);
  }
  return h;
}

RgcnModel init_params(const RgcnConfig& config, std::uint64_t seed) {
  config.validate();
  RgcnModel model{config, {}};
  Rng rng(derive_seed(seed, "init"));
  const auto dims = config.layer_dims();
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const auto [in, out] = dims[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    auto glorot = [&](const std::string& name) {
      Tensor w(in, out);
      for (double& x : w.data()) x = rng.uniform(-bound, bound);
      return Parameter("layer" + std::to_string(l) + "." + name, std::move(w));
    };
    LayerParams p;
    p.w_qr = glorot("w_qr");
    p.w_rr = glorot("w_rr");
    p.w_self = glorot("w_self");
    model.layers.push_back(std::move(p));
  }
  return model;
}

GraphMessages make_messages(const graph::HeteroGraph& g) {
  GraphMessages m;
  m.node_count = g.node_count();
  for (const auto& e : g.edges()) {
    auto& list = e.relation == graph::Relation::qr ? m.qr : m.rr;
    list.push_back({e.src, e.dst, e.weight});
    list.push_back({e.dst, e.src, e.weight});
  }
  return m;
}

namespace {

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::relu: return tensor::relu(x);
    case Activation::tanh: return tensor::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

template <typename Layer, typename Bind>
Var layer_impl(const GraphMessages& messages, Var h, Layer& params,
               Aggregator aggregator, Activation activation, Bind bind) {
  if (h.value().rows() != messages.node_count) {
    throw ValidationError("feature rows do not match graph node count");
  }
  if (h.value().cols() != params.w_self.value.rows()) {
    throw ValidationError("feature dim " + std::to_string(h.value().cols()) +
                          " does not match layer input dim " +
                          std::to_string(params.w_self.value.rows()));
  }
  const std::size_t n = messages.node_count;
  Var self = tensor::matmul(h, bind(params.w_self));
  Var from_qr = tensor::aggregate(tensor::matmul(h, bind(params.w_qr)), messages.qr, n,
                                  aggregator);
  Var from_rr = tensor::aggregate(tensor::matmul(h, bind(params.w_rr)), messages.rr, n,
                                  aggregator);
  return activate(tensor::add(tensor::add(from_qr, from_rr), self), activation);
}

template <typename Model, typename Bind>
Var forward_impl(const GraphMessages& messages, Var h0, Model& model, bool training,
                 std::uint64_t seed, Bind bind) {
  if (h0.value().cols() != model.config.input_dim) {
    throw ValidationError("input feature dim " + std::to_string(h0.value().cols()) +
                          " does not match model input dim " +
                          std::to_string(model.config.input_dim));
  }
  Var h = h0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    h = layer_impl(messages, h, model.layers[l], model.config.aggregator,
                   model.config.activation, bind);
    if (l + 1 < model.layers.size()) {
      h = tensor::dropout(h, model.config.dropout_p, derive_seed(seed, "dropout", l),
                          training);
    }
  }
  return h;
}

}  // namespace

Var layer_forward(Tape& tape, const GraphMessages& messages, Var h, LayerParams& params,
                  Aggregator aggregator, Activation activation) {
  return layer_impl(messages, h, params, aggregator, activation,
                    [&tape](Parameter& p) { return tape.param(p); });
}

Var model_forward(Tape& tape, const GraphMessages& messages, Var h0, RgcnModel& model,
                  bool training, std::uint64_t seed) {
  return forward_impl(messages, h0, model, training, seed,
                      [&tape](Parameter& p) { return tape.param(p); });
}

Tensor infer(const graph::HeteroGraph& g, const RgcnModel& model) {
  Tape tape;
  const auto messages = make_messages(g);
  Var h0 = tape.constant(g.features());
  return forward_impl(messages, h0, model, false, 0,
                      [&tape](const Parameter& p) { return tape.constant(p.value); })
      .value();
}

Tensor layer_forward(const graph::HeteroGraph& g, const Tensor& h,
                     const LayerParams& params, Aggregator aggregator,
                     Activation activation) {
  Tape tape;
  const auto messages = make_messages(g);
  return layer_impl(messages, tape.constant(h), params, aggregator, activation,
                    [&tape](const Parameter& p) { return tape.constant(p.value); })
      .value();
}

metrics::RankedList predict(const Tensor& final_features, const graph::HeteroGraph& g,
                            std::uint32_t query_node,
                            std::span<const std::uint32_t> resource_nodes) {
  if (final_features.rows() != g.node_count()) {
    throw ValidationError("feature rows do not match graph node count");
  }
  if (query_node >= g.node_count() || g.nodes()[query_node].type != graph::NodeType::query) {
    throw ValidationError("unknown query node " + std::to_string(query_node));
  }
  std::vector<metrics::ScoredItem> items;
  items.reserve(resource_nodes.size());
  const auto q = final_features.row(query_node);
  for (std::uint32_t r : resource_nodes) {
    if (r >= g.node_count() || g.nodes()[r].type != graph::NodeType::resource) {
      throw ValidationError("unknown resource node " + std::to_string(r));
    }
    items.push_back({g.nodes()[r].id, embedding::cosine(q, final_features.row(r))});
  }
  return metrics::RankedList(std::move(items));
}

metrics::RankedList rank_resources(const RgcnModel& model,
                                   std::span<const double> query_vector,
                                   const embedding::EmbeddingStore& resource_store,
                                   const graph::GraphConfig& graph_config) {
  const auto g =
      graph::build_inference_graph("query", query_vector, resource_store, graph_config);
  const Tensor h = infer(g, model);
  const auto q = g.find(graph::NodeType::query, "query");
  const auto resources = g.nodes_of(graph::NodeType::resource);
  return predict(h, g, *q, resources);
}

// ---- checkpoint -----------------------------------------------------------

namespace {
constexpr std::string_view kCheckpointMagic = "FEDCKPT1";
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& c = ckpt.model.config;
  binio::Writer w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.hidden_dim));
  w.u32(static_cast<std::uint32_t>(c.output_dim));
  w.u32(static_cast<std::uint32_t>(c.num_layers));
  w.u8(static_cast<std::uint8_t>(c.activation));
  w.u8(static_cast<std::uint8_t>(c.aggregator));
  w.f64(c.dropout_p);
  const auto& m = ckpt.meta;
  w.u64(m.seed);
  w.u32(m.epoch);
  w.f64(m.loss);
  w.f64(m.graph.lambda);
  w.u8(static_cast<std::uint8_t>(m.graph.alpha_mode));
  w.f64(m.graph.alpha);
  w.u32(static_cast<std::uint32_t>(m.graph.top_n));
  w.f64(m.graph.inference_qr_weight);
  const auto params = ckpt.model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.short_string(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (double v : p->value.data()) w.f64(v);
  }
  auto out = w.buffer();
  const std::uint64_t digest = w.digest();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(digest >> (8 * i)));
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
    throw FormatError("bad magic: not a checkpoint");
  }
  if (bytes.size() < kCheckpointMagic.size() + 12) throw FormatError("truncated checkpoint");
  binio::Reader head(bytes.subspan(kCheckpointMagic.size(), 4));
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  }
  const auto body = bytes.first(bytes.size() - 8);
  if (binio::fnv1a64(body) != binio::Reader(bytes.last(8)).u64()) {
    throw FormatError("checkpoint digest mismatch (corrupted file)");
  }
  binio::Reader r(body);
  r.take(kCheckpointMagic.size() + 4);
  Checkpoint ckpt;
  auto& c = ckpt.model.config;
  c.input_dim = r.u32();
  c.hidden_dim = r.u32();
  c.output_dim = r.u32();
  c.num_layers = r.u32();
  const std::uint8_t act = r.u8();
  const std::uint8_t agg = r.u8();
  if (act > 2 || agg > 2) throw FormatError("unknown activation or aggregator code");
  c.activation = static_cast<Activation>(act);
  c.aggregator = static_cast<Aggregator>(agg);
  c.dropout_p = r.f64();
  auto& m = ckpt.meta;
  m.seed = r.u64();
  m.epoch = r.u32();
  m.loss = r.f64();
  m.graph.lambda = r.f64();
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw FormatError("unknown alpha mode");
  m.graph.alpha_mode = static_cast<graph::AlphaMode>(mode);
  m.graph.alpha = r.f64();
  m.graph.top_n = r.u32();
  m.graph.inference_qr_weight = r.f64();
  try {
    c.validate();
    m.graph.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("invalid checkpoint config: ") + e.what());
  }

  // Shapes come from the config; the stored tensors must match them.
  ckpt.model = init_params(c, 0);
  const std::uint32_t count = r.u32();
  auto params = ckpt.model.parameters();
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, config needs " +
                      std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const std::string name = r.short_string();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw FormatError("unexpected tensor " + name + " " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
    for (double& v : p->value.data()) v = r.f64();
    p->zero_grad();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace fedrank::rgcn
