#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedrank::test {

using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Tensor t(rows, cols);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

double gradient_discrepancy(double analytic, double up, double down, double h,
                            double floor) {
  const double numeric = (up - down) / (2.0 * h);
  const double gap = std::abs(analytic - numeric);
  const double resolution = 4.0 * std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(up), std::abs(down)) / (2.0 * h);
  if (gap <= resolution) return 0.0;
  return gap / std::max({std::abs(analytic), std::abs(numeric), floor});
}

double max_gradient_error(const ScalarFn& f, const std::vector<Tensor>& inputs, double h,
                          double floor) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(t));
  Var loss = f(tape, vars);
  tape.backward(loss);
  std::vector<Tensor> analytic;
  for (const auto& v : vars) analytic.push_back(v.grad());

  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape t;
    std::vector<Var> vs;
    for (const auto& x : xs) vs.push_back(t.constant(x));
    return f(t, vs).value().item();
  };

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double x0 = inputs[i].data()[k];
      probe[i].data()[k] = x0 + h;
      const double up = evaluate(probe);
      probe[i].data()[k] = x0 - h;
      const double down = evaluate(probe);
      probe[i].data()[k] = x0;
      worst = std::max(worst, gradient_discrepancy(analytic[i].data()[k], up, down, h, floor));
    }
  }
  return worst;
}

Var project(Var x, std::uint64_t seed) {
  Rng rng(seed);
  Tape& tape = *x.tape();
  Var r = tape.constant(random_tensor(rng, 1, x.shape().rows));
  Var c = tape.constant(random_tensor(rng, x.shape().cols, 1));
  return tensor::matmul(tensor::matmul(r, x), c);
}

graph::HeteroGraph random_graph(Rng& rng, std::size_t queries, std::size_t resources,
                                std::size_t dim, double edge_p) {
  graph::GraphConfig config;
  graph::HeteroGraph g(dim, config);
  std::vector<std::uint32_t> q, r;
  auto features = [&] {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  };
  for (std::size_t i = 0; i < queries; ++i) {
    q.push_back(g.add_node("q" + std::to_string(i), graph::NodeType::query, features()));
  }
  for (std::size_t i = 0; i < resources; ++i) {
    r.push_back(g.add_node("R" + std::to_string(i), graph::NodeType::resource, features()));
  }
  for (auto a : q) {
    for (auto b : r) {
      if (rng.bernoulli(edge_p)) g.add_edge(a, b, graph::Relation::qr, rng.uniform(0.05, 1.0));
    }
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      if (rng.bernoulli(edge_p)) g.add_edge(r[i], r[j], graph::Relation::rr, rng.uniform(0.0, 1.0));
    }
  }
  g.canonicalize();
  return g;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fedrank_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fedrank::test
