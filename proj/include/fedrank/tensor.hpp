#pragma once

// Dense 64-bit matrices with tape-based reverse-mode differentiation and an
// Adam optimizer. Everything the R-GCN needs is expressed as 2-D tensors;
// vectors are 1 x n and scalars are 1 x 1.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fedrank::tensor {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape s);

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row_vector(std::span<const double> values);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * shape_.cols + c];
  }
  double item() const;  // value of a 1 x 1 tensor

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * shape_.cols, shape_.cols);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * shape_.cols, shape_.cols);
  }

  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// A trainable matrix and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  Tensor grad() const;  // zeros if no gradient reached this value
  Shape shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in creation order; backward() replays their gradient
// rules in reverse, which is a reverse topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value that never receives a gradient.
  Var constant(Tensor value);
  // Input that receives a gradient (readable through Var::grad()).
  Var input(Tensor value);
  // Reads param.value; backward() adds into param.grad.
  Var param(Parameter& param);

  // Requires a 1 x 1 loss. May be called once per tape.
  void backward(Var loss);
  bool backward_done() const { return backward_done_; }
  std::size_t size() const { return nodes_.size(); }

  // Appends a node. `rule` receives the node's gradient and pushes it into
  // the parents; it is dropped when needs_grad is false.
  Var record(Tensor value, bool needs_grad,
             std::function<void(Tape&, const Tensor& out_grad)> rule);

  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  Tensor grad_of(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(std::size_t id, const Tensor& g);
  Tensor& grad_slot(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&, const Tensor&)> rule;
  };

  // A deque keeps Var::value() references valid while the tape grows.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// ---- differentiable operations --------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var tanh(Var a);
Var mean_rows(Var a);
// Row r of a as a 1 x cols tensor.
Var row(Var a, std::size_t r);

// Inverted dropout: in training mode each entry is zeroed with probability p
// and survivors are scaled by 1/(1-p); the mask is a function of `seed`.
// Identity when training is false or p == 0. Throws for p outside [0, 1).
Var dropout(Var a, double p, std::uint64_t seed, bool training);

// Cosine similarity of two same-size tensors, flattened. 0 with zero
// gradients when exactly one side is zero; throws NumericError when both are.
Var cosine(Var a, Var b);

enum class Reduction { sum, mean };

// Squared error between 1 x 1 predictions and targets: the sum of squares,
// divided by the count for Reduction::mean.
Var mse(std::span<const Var> predictions, std::span<const double> targets,
        Reduction reduction = Reduction::sum);

// One weighted message from row `src` of the input to row `dst` of the output.
struct Message {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 1.0;
};

enum class Aggregator { sum, mean, max };

// out[dst] = agg over messages into dst of weight * x[src]; rows with no
// incoming message are zero. `max` is elementwise.
Var aggregate(Var x, std::span<const Message> messages, std::size_t out_rows,
              Aggregator mode);

// ---- optimizer ------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// Bias-corrected Adam update from each parameter's .grad. Throws
// NumericError (before touching anything) if a gradient is non-finite.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace fedrank::tensor
