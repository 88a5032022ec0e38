#pragma once

// Shared test helpers: random tensors and graphs, a central-difference
// gradient checker and a scratch directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fedrank/graph.hpp"
#include "fedrank/random.hpp"
#include "fedrank/tensor.hpp"

namespace fedrank::test {

tensor::Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols,
                             double lo = -1.0, double hi = 1.0);

using ScalarFn =
    std::function<tensor::Var(tensor::Tape&, const std::vector<tensor::Var>&)>;

// Relative error of one gradient entry against (up - down) / 2h. A gap no
// larger than the rounding resolution of that quotient, 4 eps |f| / 2h,
// counts as zero: below it the difference carries no information.
double gradient_discrepancy(double analytic, double up, double down, double h, double floor);

// Largest gradient_discrepancy over every entry of every input.
double max_gradient_error(const ScalarFn& f, const std::vector<tensor::Tensor>& inputs,
                          double h = 1e-6, double floor = 1e-6);

// Reduces any tensor to a scalar through fixed random row and column
// weights: r^T x c.
tensor::Var project(tensor::Var x, std::uint64_t seed);

// Random graph with `queries` + `resources` nodes, random qr/rr edges and
// features of width `dim`.
graph::HeteroGraph random_graph(Rng& rng, std::size_t queries, std::size_t resources,
                                std::size_t dim, double edge_p = 0.5);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fedrank::test
