#include "fedrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedrank/error.hpp"
#include "fedrank/random.hpp"

namespace fedrank::tensor {

std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : shape_{rows, cols}, data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw UsageError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw UsageError("item() on a " + to_string(shape_) + " tensor");
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

// ---- Tape -----------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value_of(id_); }
Tensor Var::grad() const { return tape_->grad_of(id_); }

Var Tape::record(Tensor value, bool needs_grad,
                 std::function<void(Tape&, const Tensor&)> rule) {
  if (backward_done_) throw UsageError("tape already differentiated");
  if (!value.all_finite()) {
    throw NumericError("operation produced a non-finite value");
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.rule = std::move(rule);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return record(std::move(value), false, {}); }

Var Tape::input(Tensor value) { return record(std::move(value), true, {}); }

Var Tape::param(Parameter& p) {
  Var v = record(p.value, true, {});
  nodes_[v.id_].param = &p;
  return v;
}

Tensor Tape::grad_of(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.has_grad ? n.grad : Tensor(n.value.rows(), n.value.cols());
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].needs_grad) return;
  auto dst = grad_slot(id).data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw UsageError("loss belongs to another tape");
  if (backward_done_) {
    throw UsageError("backward called twice on the same tape; re-run forward");
  }
  if (loss.value().shape() != Shape{1, 1}) {
    throw UsageError("backward requires a scalar loss, got " +
                     to_string(loss.value().shape()));
  }
  backward_done_ = true;
  if (!nodes_[loss.id_].needs_grad) return;
  grad_slot(loss.id_).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.rule) n.rule(*this, n.grad);
    if (n.param != nullptr) {
      Tensor& pg = n.param->grad;
      if (pg.shape() != n.grad.shape()) pg = Tensor(n.grad.rows(), n.grad.cols());
      auto dst = pg.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

// ---- operations -----------------------------------------------------------

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw UsageError("operands recorded on different tapes");
  }
  return *a.tape();
}

bool any_grad(Tape& t, std::initializer_list<Var> vars) {
  for (Var v : vars) {
    if (t.needs_grad(v.id())) return true;
  }
  return false;
}

// c (+)= a * b, i-k-j loop order.
void gemm(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

// c += a * b^T
void gemm_bt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c(i, j) += s;
    }
  }
}

// c += a^T * b
void gemm_at(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = b.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      double* crow = c.row(p).data();
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw UsageError("matmul shape mismatch: " + to_string(av.shape()) + " x " +
                     to_string(bv.shape()));
  }
  Tensor out(av.rows(), bv.cols());
  gemm(av, bv, out);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), any_grad(t, {a, b}),
                  [ia, ib](Tape& tp, const Tensor& g) {
                    const Tensor& A = tp.value_of(ia);
                    const Tensor& B = tp.value_of(ib);
                    if (tp.needs_grad(ia)) gemm_bt(g, B, tp.grad_slot(ia));
                    if (tp.needs_grad(ib)) gemm_at(A, g, tp.grad_slot(ib));
                  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw UsageError("add shape mismatch: " + to_string(a.shape()) + " + " +
                     to_string(b.shape()));
  }
  Tensor out = a.value();
  auto dst = out.data();
  auto src = b.value().data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), any_grad(t, {a, b}),
                  [ia, ib](Tape& tp, const Tensor& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& x : out.data()) x *= s;
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia, s](Tape& tp, const Tensor& g) {
                    auto dst = tp.grad_slot(ia).data();
                    auto src = g.data();
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
                  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia](Tape& tp, const Tensor& g) {
                    auto in = tp.value_of(ia).data();
                    auto dst = tp.grad_slot(ia).data();
                    auto src = g.data();
                    for (std::size_t i = 0; i < dst.size(); ++i) {
                      if (in[i] > 0.0) dst[i] += src[i];
                    }
                  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();  // id this node is about to receive
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia, io](Tape& tp, const Tensor& g) {
                    auto y = tp.value_of(io).data();
                    auto dst = tp.grad_slot(ia).data();
                    auto src = g.data();
                    for (std::size_t i = 0; i < dst.size(); ++i) {
                      dst[i] += src[i] * (1.0 - y[i] * y[i]);
                    }
                  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  if (av.rows() == 0) throw UsageError("mean_rows of an empty tensor");
  Tensor out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
  }
  const double n = static_cast<double>(av.rows());
  for (double& x : out.data()) x /= n;
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia, n](Tape& tp, const Tensor& g) {
                    Tensor& ga = tp.grad_slot(ia);
                    for (std::size_t r = 0; r < ga.rows(); ++r) {
                      for (std::size_t c = 0; c < ga.cols(); ++c) {
                        ga(r, c) += g(0, c) / n;
                      }
                    }
                  });
}

Var row(Var a, std::size_t r) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  if (r >= av.rows()) {
    throw UsageError("row " + std::to_string(r) + " out of range for " +
                     to_string(av.shape()));
  }
  Tensor out = Tensor::row_vector(av.row(r));
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia, r](Tape& tp, const Tensor& g) {
                    auto dst = tp.grad_slot(ia).row(r);
                    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += g(0, c);
                  });
}

Var dropout(Var a, double p, std::uint64_t seed, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw UsageError("dropout probability must lie in [0, 1)");
  }
  if (!training || p == 0.0) return a;
  Tape& t = *a.tape();
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(a.value().size());
  for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out = a.value();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mask[i];
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(ia),
                  [ia, mask = std::move(mask)](Tape& tp, const Tensor& g) {
                    auto dst = tp.grad_slot(ia).data();
                    auto src = g.data();
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * mask[i];
                  });
}

Var cosine(Var a, Var b) {
  Tape& t = same_tape(a, b);
  auto x = a.value().data();
  auto y = b.value().data();
  if (x.size() != y.size()) {
    throw UsageError("cosine over tensors of different size");
  }
  double dot = 0.0, nx2 = 0.0, ny2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx2 += x[i] * x[i];
    ny2 += y[i] * y[i];
  }
  if (nx2 == 0.0 && ny2 == 0.0) {
    throw NumericError("cosine of two zero vectors is undefined");
  }
  const bool degenerate = nx2 == 0.0 || ny2 == 0.0;
  const double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
  const double c = degenerate ? 0.0 : dot / (nx * ny);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      Tensor::scalar(c), any_grad(t, {a, b}) && !degenerate,
      [ia, ib, c, nx, ny](Tape& tp, const Tensor& g) {
        const double gs = g.item();
        auto x = tp.value_of(ia).data();
        auto y = tp.value_of(ib).data();
        const double inv = 1.0 / (nx * ny);
        if (tp.needs_grad(ia)) {
          auto dst = tp.grad_slot(ia).data();
          for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += gs * (y[i] * inv - c * x[i] / (nx * nx));
          }
        }
        if (tp.needs_grad(ib)) {
          auto dst = tp.grad_slot(ib).data();
          for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += gs * (x[i] * inv - c * y[i] / (ny * ny));
          }
        }
      });
}

Var mse(std::span<const Var> predictions, std::span<const double> targets,
        Reduction reduction) {
  if (predictions.size() != targets.size()) {
    throw UsageError("mse: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(targets.size()) +
                     " targets");
  }
  if (predictions.empty()) throw UsageError("mse over an empty list");
  Tape& t = *predictions.front().tape();
  double loss = 0.0;
  bool needs = false;
  std::vector<std::size_t> ids;
  std::vector<double> residuals;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].tape() != &t) throw UsageError("mse across tapes");
    const double r = predictions[i].value().item() - targets[i];
    loss += r * r;
    ids.push_back(predictions[i].id());
    residuals.push_back(r);
    needs = needs || t.needs_grad(predictions[i].id());
  }
  const double factor =
      reduction == Reduction::mean ? 1.0 / static_cast<double>(targets.size()) : 1.0;
  return t.record(Tensor::scalar(loss * factor), needs,
                  [ids, residuals, factor](Tape& tp, const Tensor& g) {
                    const double gs = g.item();
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      if (!tp.needs_grad(ids[i])) continue;
                      tp.grad_slot(ids[i])(0, 0) += gs * factor * 2.0 * residuals[i];
                    }
                  });
}

Var aggregate(Var x, std::span<const Message> messages, std::size_t out_rows,
              Aggregator mode) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  const std::size_t d = xv.cols();
  for (const auto& m : messages) {
    if (m.src >= xv.rows() || m.dst >= out_rows) {
      throw UsageError("message endpoint out of range");
    }
  }
  Tensor out(out_rows, d);
  const std::size_t ix = x.id();
  const bool needs = t.needs_grad(ix);

  if (mode == Aggregator::max) {
    // argmax[dst * d + c] = index of the winning message, or -1 if none.
    std::vector<std::ptrdiff_t> argmax(out_rows * d, -1);
    for (std::size_t k = 0; k < messages.size(); ++k) {
      const auto& m = messages[k];
      auto src = xv.row(m.src);
      for (std::size_t c = 0; c < d; ++c) {
        const double v = m.weight * src[c];
        auto& slot = argmax[m.dst * d + c];
        if (slot < 0 || v > out(m.dst, c)) {
          out(m.dst, c) = v;
          slot = static_cast<std::ptrdiff_t>(k);
        }
      }
    }
    std::vector<Message> msgs(messages.begin(), messages.end());
    return t.record(std::move(out), needs,
                    [ix, d, msgs = std::move(msgs), argmax = std::move(argmax)](
                        Tape& tp, const Tensor& g) {
                      Tensor& gx = tp.grad_slot(ix);
                      for (std::size_t slot = 0; slot < argmax.size(); ++slot) {
                        if (argmax[slot] < 0) continue;
                        const auto& m = msgs[static_cast<std::size_t>(argmax[slot])];
                        const std::size_t c = slot % d;
                        gx(m.src, c) += m.weight * g(slot / d, c);
                      }
                    });
  }

  std::vector<Message> msgs(messages.begin(), messages.end());
  if (mode == Aggregator::mean) {
    std::vector<std::size_t> indegree(out_rows, 0);
    for (const auto& m : msgs) ++indegree[m.dst];
    for (auto& m : msgs) m.weight /= static_cast<double>(indegree[m.dst]);
  }
  for (const auto& m : msgs) {
    auto src = xv.row(m.src);
    auto dst = out.row(m.dst);
    for (std::size_t c = 0; c < d; ++c) dst[c] += m.weight * src[c];
  }
  return t.record(std::move(out), needs,
                  [ix, msgs = std::move(msgs)](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(ix);
                    for (const auto& m : msgs) {
                      auto src = g.row(m.dst);
                      auto dst = gx.row(m.src);
                      for (std::size_t c = 0; c < dst.size(); ++c) {
                        dst[c] += m.weight * src[c];
                      }
                    }
                  });
}

// ---- Adam -----------------------------------------------------------------

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  const AdamConfig& cfg = state.config;
  if (!(cfg.lr > 0.0)) throw UsageError("Adam learning rate must be positive");
  for (const Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      throw UsageError("gradient shape mismatch for parameter " + p->name);
    }
    if (!p->grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter " + p->name);
    }
  }
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw UsageError("Adam state tracks a different parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (state.m[k].shape() != p.value.shape()) {
      throw UsageError("Adam moment shape mismatch for parameter " + p.name);
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

}  // namespace fedrank::tensor
