#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedrank/error.hpp"
#include "fedrank/rgcn.hpp"
#include "suites.hpp"
#include "support.hpp"

using namespace fedrank;
using namespace fedrank::rgcn;
using graph::HeteroGraph;
using graph::NodeType;
using graph::Relation;
using tensor::Aggregator;
using tensor::Tensor;

namespace {

RgcnConfig small_config(std::size_t dim, std::size_t layers, Activation act) {
  RgcnConfig c;
  c.input_dim = c.hidden_dim = c.output_dim = dim;
  c.num_layers = layers;
  c.activation = act;
  return c;
}

// q - R1 - R2 - R3: one qr edge, then a chain of rr edges.
HeteroGraph path_graph(const std::vector<std::vector<double>>& features) {
  HeteroGraph g(features[0].size(), {});
  const auto q = g.add_node("q", NodeType::query, features[0]);
  const auto r1 = g.add_node("R1", NodeType::resource, features[1]);
  const auto r2 = g.add_node("R2", NodeType::resource, features[2]);
  const auto r3 = g.add_node("R3", NodeType::resource, features[3]);
  g.add_edge(q, r1, Relation::qr, 0.7);
  g.add_edge(r1, r2, Relation::rr, 0.9);
  g.add_edge(r2, r3, Relation::rr, 0.8);
  g.canonicalize();
  return g;
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  return {t.data().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
          t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols())};
}

}  // namespace

TEST_CASE("init_params: deterministic, bounded, seed-sensitive") {
  RgcnConfig c = small_config(6, 2, Activation::relu);
  c.hidden_dim = 4;
  const auto a = init_params(c, 17);
  const auto b = init_params(c, 17);
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != init_params(c, 18).digest());
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto [din, dout] = c.layer_dims()[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(din + dout));
    for (const auto* p : {&a.layers[l].w_qr, &a.layers[l].w_rr, &a.layers[l].w_self}) {
      CHECK(p->value.rows() == din);
      CHECK(p->value.cols() == dout);
      for (double w : p->value.data()) CHECK(std::abs(w) <= bound);
    }
  }
  RgcnConfig zero = c;
  zero.hidden_dim = 0;
  CHECK_THROWS_AS(init_params(zero, 1), UsageError);
}

TEST_CASE("the two-node hand example") {
  CHECK(test::rgcn_hand_example());
}

TEST_CASE("an isolated node only sees its own transform") {
  HeteroGraph g(2, {});
  g.add_node("q", NodeType::query, std::vector<double>{1.0, -2.0});
  LayerParams p{tensor::Parameter("w_qr", Tensor::identity(2)),
                tensor::Parameter("w_rr", Tensor::identity(2)),
                tensor::Parameter("w_self", Tensor(2, 2, {2.0, 0.0, 1.0, 1.0}))};
  const Tensor out = layer_forward(g, g.features(), p, Aggregator::sum, Activation::identity);
  // [1, -2] x [[2, 0], [1, 1]] = [0, -2]
  CHECK(row(out, 0) == std::vector<double>{0.0, -2.0});
  const Tensor relu = layer_forward(g, g.features(), p, Aggregator::sum, Activation::relu);
  CHECK(row(relu, 0) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("layer_forward matches a dense adjacency oracle") {
  CHECK(test::rgcn_dense_oracle_gap(31, 50, Aggregator::sum) <= 1e-9);
  CHECK(test::rgcn_dense_oracle_gap(32, 50, Aggregator::mean) <= 1e-9);
}

TEST_CASE("a one-layer model is layer_forward") {
  Rng rng(4);
  const auto g = test::random_graph(rng, 3, 5, 4);
  const auto model = init_params(small_config(4, 1, Activation::tanh), 9);
  const Tensor a = infer(g, model);
  const Tensor b =
      layer_forward(g, g.features(), model.layers[0], Aggregator::sum, Activation::tanh);
  CHECK(a == b);
}

TEST_CASE("dropout 0 in training equals evaluation") {
  Rng rng(5);
  const auto g = test::random_graph(rng, 2, 6, 3);
  auto model = init_params(small_config(3, 2, Activation::relu), 2);
  const auto messages = make_messages(g);
  tensor::Tape t;
  const Tensor train_out =
      model_forward(t, messages, t.constant(g.features()), model, true, 99).value();
  CHECK(train_out == infer(g, model));
}

TEST_CASE("two layers reach two hops and no further") {
  const std::vector<std::vector<double>> base{
      {0.3, -0.2, 0.5}, {0.1, 0.4, -0.3}, {-0.6, 0.2, 0.1}, {0.2, 0.2, -0.4}};
  const auto model = init_params(small_config(3, 2, Activation::tanh), 12);
  const Tensor h = infer(path_graph(base), model);

  auto two_hop = base;
  two_hop[2][0] += 0.5;  // R2 is two hops from q
  CHECK(row(infer(path_graph(two_hop), model), 0) != row(h, 0));

  auto three_hop = base;
  three_hop[3][0] += 0.5;  // R3 is three hops from q
  CHECK(row(infer(path_graph(three_hop), model), 0) == row(h, 0));

  const auto one_layer = init_params(small_config(3, 1, Activation::tanh), 12);
  CHECK(row(infer(path_graph(two_hop), one_layer), 0) ==
        row(infer(path_graph(base), one_layer), 0));
}

TEST_CASE("relabeling nodes permutes the output") {
  Rng rng(6);
  const std::size_t dim = 3;
  std::vector<std::vector<double>> f(6, std::vector<double>(dim));
  for (auto& v : f) {
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
  }
  const std::vector<std::string> ids{"q0", "q1", "R0", "R1", "R2", "R3"};
  auto build = [&](const std::vector<std::size_t>& order) {
    HeteroGraph g(dim, {});
    std::vector<std::uint32_t> at(6);
    for (std::size_t i : order) {
      at[i] = g.add_node(ids[i], i < 2 ? NodeType::query : NodeType::resource, f[i]);
    }
    g.add_edge(at[0], at[2], Relation::qr, 0.5);
    g.add_edge(at[0], at[3], Relation::qr, 1.0);
    g.add_edge(at[1], at[4], Relation::qr, 0.25);
    g.add_edge(at[2], at[5], Relation::rr, 0.6);
    g.add_edge(at[3], at[4], Relation::rr, 0.9);
    g.canonicalize();
    return g;
  };
  const auto a = build({0, 1, 2, 3, 4, 5});
  const auto b = build({5, 3, 1, 4, 0, 2});
  for (auto agg : {Aggregator::sum, Aggregator::mean, Aggregator::max}) {
    auto config = small_config(dim, 2, Activation::relu);
    config.aggregator = agg;
    const auto model = init_params(config, 8);
    const Tensor ha = infer(a, model), hb = infer(b, model);
    for (const auto& id : ids) {
      const auto type = id[0] == 'q' ? NodeType::query : NodeType::resource;
      const auto ra = row(ha, *a.find(type, id)), rb = row(hb, *b.find(type, id));
      for (std::size_t k = 0; k < dim; ++k) CHECK(ra[k] == doctest::Approx(rb[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("a zero-weight edge is the same as no edge under sum") {
  Rng rng(7);
  auto g = test::random_graph(rng, 2, 4, 3, 0.0);
  const auto model = init_params(small_config(3, 2, Activation::relu), 3);
  const Tensor without = infer(g, model);
  g.add_edge(*g.find(NodeType::query, "q0"), *g.find(NodeType::resource, "R1"), Relation::qr,
             0.0);
  g.canonicalize();
  CHECK(infer(g, model) == without);
}

TEST_CASE("predict ranks by cosine with ties by id") {
  HeteroGraph g(2, {});
  g.add_node("q", NodeType::query, std::vector<double>{1, 0});
  const auto b = g.add_node("B", NodeType::resource, std::vector<double>{0, 1});
  const auto a = g.add_node("A", NodeType::resource, std::vector<double>{0, 2});
  const auto c = g.add_node("C", NodeType::resource, std::vector<double>{3, 0});
  const std::vector<std::uint32_t> rs{b, a, c};
  const auto ranked = predict(g.features(), g, 0, rs);
  CHECK(ranked.ids() == std::vector<std::string>{"C", "A", "B"});
  CHECK(ranked[0].score == doctest::Approx(1.0));
  CHECK_THROWS_AS(predict(g.features(), g, 7, rs), ValidationError);
}

TEST_CASE("predict order agrees with a re-sort and stays in range") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = test::random_graph(rng, 1, 8, 4);
    const auto model = init_params(small_config(4, 2, Activation::tanh), rng.next_u64());
    const Tensor h = infer(g, model);
    const auto rs = g.nodes_of(NodeType::resource);
    const auto ranked = predict(h, g, g.nodes_of(NodeType::query)[0], rs);
    auto items = ranked.items();
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
      return x.score != y.score ? x.score > y.score : x.id < y.id;
    });
    CHECK(items == ranked.items());
    for (const auto& it : items) {
      CHECK(it.score >= -1.0);
      CHECK(it.score <= 1.0);
    }
  }
}

TEST_CASE("checkpoints reproduce forward outputs and keep metadata") {
  Rng rng(10);
  const auto g = test::random_graph(rng, 2, 5, 4);
  auto config = small_config(4, 2, Activation::relu);
  config.hidden_dim = 3;
  config.aggregator = Aggregator::mean;
  config.dropout_p = 0.3;
  Checkpoint ckpt{init_params(config, 5), {}};
  ckpt.meta.seed = 42;
  ckpt.meta.epoch = 200;
  ckpt.meta.loss = 0.125;
  ckpt.meta.graph.lambda = 0.3;
  ckpt.meta.graph.inference_qr_weight = 0.4;

  const auto dir = test::scratch_dir("checkpoint");
  save_checkpoint(ckpt, dir / "m.ckpt");
  const auto back = load_checkpoint(dir / "m.ckpt");
  CHECK(back.meta == ckpt.meta);
  CHECK(back.model.config == ckpt.model.config);
  CHECK(back.model.digest() == ckpt.model.digest());
  CHECK(infer(g, back.model) == infer(g, ckpt.model));

  auto bytes = encode_checkpoint(ckpt);
  auto corrupted = bytes;
  corrupted[corrupted.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode_checkpoint(corrupted), FormatError);
  auto wrong_version = bytes;
  wrong_version[8] = 7;
  CHECK_THROWS_AS(decode_checkpoint(wrong_version), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>{'x'}), FormatError);
}
