#include "pwm/numerics/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "pwm/errors.hpp"
#include "pwm/numerics/kernels.hpp"

namespace pwm::nn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)

Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn, const char* what) {
  value.require_finite(what);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents)
    if (p.requires_grad()) node->requires_grad = true;
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.ptr());
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_same_shape(const Var& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

// Output shape of an op that maps [.., in] to [.., out].
Shape with_cols(const Shape& s, std::size_t cols) {
  Shape r = s;
  r.back() = cols;
  return r;
}

template <class F>
Var unary(const Var& a, const char* what, F&& f, std::function<void(Node&)> bw) {
  Tensor out(a.shape());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return make(std::move(out), {a}, std::move(bw), what);
}

}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.size() != val().size()) grad = Tensor(val().shape(), 0.0);
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::view(const Tensor& value) {
  auto node = std::make_shared<Node>();
  node->external = &value;
  return Var(std::move(node));
}

Var Var::parameter(const Tensor& value, Tensor& grad_sink) {
  if (grad_sink.shape() != value.shape()) throw DimensionError("parameter gradient shape mismatch");
  auto node = std::make_shared<Node>();
  node->external = &value;
  node->requires_grad = true;
  node->sink = &grad_sink;
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (!loss.valid() || loss.value().size() != 1) throw ContractError("backward: loss must be a scalar");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(&loss.node(), 0);
  seen.insert(&loss.node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  loss.node().ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    if (n->backward_fn) n->backward_fn(*n);
    if (n->sink) {
      auto& sink = *n->sink;
      for (std::size_t i = 0; i < sink.size(); ++i) sink[i] += n->grad[i];
    }
  }
  for (Node* n : order) {
    n->parents.clear();
    n->backward_fn = nullptr;
    n->grad = Tensor();
  }
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(n, k);
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(n, k);
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * n.grad[i];
    }
  }, "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    Node& pa = parent(n, 0);
    Node& pb = parent(n, 1);
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pb.val()[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pa.val()[i];
    }
  }, "mul");
}

Var scale(const Var& a, double c) {
  return unary(a, "scale", [c](double v) { return c * v; }, [c](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().span()) s += v;
  return make(Tensor::vector({s}), {a}, [](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
  }, "sum");
}

Var tanh(const Var& a) {
  return unary(a, "tanh", [](double v) { return std::tanh(v); }, [](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
  });
}

Var sigmoid(const Var& a) {
  return unary(a, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
  });
}

Var relu(const Var& a) {
  return unary(a, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (n.value[i] > 0.0) g[i] += n.grad[i];
  });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); }, [lo, hi](Node& n) {
    auto& p = parent(n, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = p.val()[i];
      if (v >= lo && v <= hi) g[i] += n.grad[i];
    }
  });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rows = parts[0].rows();
  const std::size_t rank = parts[0].shape().size();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows || p.shape().size() != rank) throw DimensionError("concat: row count mismatch");
    cols += p.cols();
  }
  Tensor out(with_cols(parts[0].shape(), cols));
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t pc = p.cols();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pc; ++c) out[r * cols + off + c] = p.value()[r * pc + c];
    off += pc;
  }
  return make(std::move(out), std::vector<Var>(parts.begin(), parts.end()), [offsets, rows, cols](Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Node& p = parent(n, k);
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      const std::size_t pc = p.val().cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < pc; ++c) g[r * pc + c] += n.grad[r * cols + offsets[k] + c];
    }
  }, "concat");
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const std::size_t cols = a.cols();
  if (begin >= end || end > cols) throw DimensionError("slice_cols: invalid range");
  const std::size_t rows = a.rows();
  const std::size_t w = end - begin;
  Tensor out(with_cols(a.shape(), w));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = a.value()[r * cols + begin + c];
  return make(std::move(out), {a}, [rows, cols, begin, w](Node& n) {
    auto& g = parent(n, 0).ensure_grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += n.grad[r * w + c];
  }, "slice_cols");
}

Var affine(const Var& x, const Var& w, const Var& b) {
  if (w.shape().size() != 2) throw DimensionError("affine: weight must be rank 2");
  const std::size_t out = w.shape()[0];
  const std::size_t in = w.shape()[1];
  if (x.cols() != in)
    throw DimensionError("affine: input " + shape_string(x.shape()) + " incompatible with weight " +
                         shape_string(w.shape()));
  if (b.shape() != Shape{out}) throw DimensionError("affine: bias shape mismatch");
  const std::size_t batch = x.rows();
  Tensor y(with_cols(x.shape(), out));
  kernels::affine_forward(x.value().data(), w.value().data(), b.value().data(), y.data(), batch, in, out);
  return make(std::move(y), {x, w, b}, [batch, in, out](Node& n) {
    Node& px = parent(n, 0);
    Node& pw = parent(n, 1);
    Node& pb = parent(n, 2);
    kernels::affine_backward(px.val().data(), pw.val().data(), n.grad.data(),
                             px.requires_grad ? px.ensure_grad().data() : nullptr,
                             pw.requires_grad ? pw.ensure_grad().data() : nullptr,
                             pb.requires_grad ? pb.ensure_grad().data() : nullptr, batch, in, out);
  }, "affine");
}

Var gru_step(const Var& x, const Var& h, const GruWeights& w) {
  const std::size_t hidden = h.cols();
  const std::size_t in = x.cols();
  const std::size_t batch = x.rows();
  if (h.rows() != batch) throw DimensionError("gru_step: batch mismatch between input and hidden state");
  if (w.w_ih.shape() != Shape{3 * hidden, in} || w.w_hh.shape() != Shape{3 * hidden, hidden} ||
      w.b_ih.shape() != Shape{3 * hidden} || w.b_hh.shape() != Shape{3 * hidden})
    throw DimensionError("gru_step: weights incompatible with input " + shape_string(x.shape()) + " / hidden " +
                         shape_string(h.shape()));

  const std::size_t g3 = 3 * hidden;
  auto gx = std::make_shared<std::vector<double>>(batch * g3);
  auto gh = std::make_shared<std::vector<double>>(batch * g3);
  auto r = std::make_shared<std::vector<double>>(batch * hidden);
  auto z = std::make_shared<std::vector<double>>(batch * hidden);
  auto nn = std::make_shared<std::vector<double>>(batch * hidden);
  kernels::affine_forward(x.value().data(), w.w_ih.value().data(), w.b_ih.value().data(), gx->data(), batch, in,
                          g3);
  kernels::affine_forward(h.value().data(), w.w_hh.value().data(), w.b_hh.value().data(), gh->data(), batch,
                          hidden, g3);
  Tensor h_new(h.shape());
  kernels::gru_gates(gx->data(), gh->data(), h.value().data(), r->data(), z->data(), nn->data(), h_new.data(),
                     batch, hidden);

  return make(std::move(h_new), {x, h, w.w_ih, w.w_hh, w.b_ih, w.b_hh},
              [gh, r, z, nn, batch, in, hidden, g3](Node& n) {
                Node& px = parent(n, 0);
                Node& ph = parent(n, 1);
                Node& pwih = parent(n, 2);
                Node& pwhh = parent(n, 3);
                Node& pbih = parent(n, 4);
                Node& pbhh = parent(n, 5);
                std::vector<double> dgx(batch * g3), dgh(batch * g3);
                std::vector<double> dh_direct(batch * hidden, 0.0);
                kernels::gru_gates_backward(gh->data(), ph.val().data(), r->data(), z->data(), nn->data(),
                                            n.grad.data(), dgx.data(), dgh.data(), dh_direct.data(), batch,
                                            hidden);
                if (ph.requires_grad) {
                  auto& g = ph.ensure_grad();
                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += dh_direct[i];
                }
                kernels::affine_backward(px.val().data(), pwih.val().data(), dgx.data(),
                                         px.requires_grad ? px.ensure_grad().data() : nullptr,
                                         pwih.requires_grad ? pwih.ensure_grad().data() : nullptr,
                                         pbih.requires_grad ? pbih.ensure_grad().data() : nullptr, batch, in, g3);
                kernels::affine_backward(ph.val().data(), pwhh.val().data(), dgh.data(),
                                         ph.requires_grad ? ph.ensure_grad().data() : nullptr,
                                         pwhh.requires_grad ? pwhh.ensure_grad().data() : nullptr,
                                         pbhh.requires_grad ? pbhh.ensure_grad().data() : nullptr, batch, hidden,
                                         g3);
              },
              "gru_step");
}

Var gaussian_sample(const Var& mean, const Var& logvar, const Tensor& noise) {
  require_same_shape(mean, logvar, "gaussian_sample");
  require_same_shape(mean, noise, "gaussian_sample");
  Tensor out(mean.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mean.value()[i] + std::exp(0.5 * logvar.value()[i]) * noise[i];
  return make(std::move(out), {mean, logvar}, [noise](Node& n) {
    Node& pm = parent(n, 0);
    Node& pl = parent(n, 1);
    if (pm.requires_grad) {
      auto& g = pm.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pl.requires_grad) {
      auto& g = pl.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * 0.5 * std::exp(0.5 * pl.val()[i]) * noise[i];
    }
  }, "gaussian_sample");
}

Var kl_to_standard_normal(const Var& mean, const Var& logvar) {
  require_same_shape(mean, logvar, "kl_to_standard_normal");
  double s = 0.0;
  const auto& m = mean.value();
  const auto& lv = logvar.value();
  for (std::size_t i = 0; i < m.size(); ++i) s += std::exp(lv[i]) + m[i] * m[i] - 1.0 - lv[i];
  return make(Tensor::vector({0.5 * s}), {mean, logvar}, [](Node& n) {
    Node& pm = parent(n, 0);
    Node& pl = parent(n, 1);
    const double g0 = n.grad[0];
    if (pm.requires_grad) {
      auto& g = pm.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * pm.val()[i];
    }
    if (pl.requires_grad) {
      auto& g = pl.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * 0.5 * (std::exp(pl.val()[i]) - 1.0);
    }
  }, "kl_to_standard_normal");
}

Var gaussian_nll(const Var& mean, const Var& logvar, const Tensor& target) {
  require_same_shape(mean, logvar, "gaussian_nll");
  require_same_shape(mean, target, "gaussian_nll");
  double s = 0.0;
  const auto& m = mean.value();
  const auto& lv = logvar.value();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = target[i] - m[i];
    s += lv[i] + d * d * std::exp(-lv[i]) + kLog2Pi;
  }
  return make(Tensor::vector({0.5 * s}), {mean, logvar}, [target](Node& n) {
    Node& pm = parent(n, 0);
    Node& pl = parent(n, 1);
    const double g0 = n.grad[0];
    const auto& m = pm.val();
    const auto& lv = pl.val();
    if (pm.requires_grad) {
      auto& g = pm.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * (m[i] - target[i]) * std::exp(-lv[i]);
    }
    if (pl.requires_grad) {
      auto& g = pl.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = target[i] - m[i];
        g[i] += g0 * 0.5 * (1.0 - d * d * std::exp(-lv[i]));
      }
    }
  }, "gaussian_nll");
}

Var squared_error(const Var& pred, const Tensor& target) {
  require_same_shape(pred, target, "squared_error");
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = pred.value()[i] - target[i];
    s += d * d;
  }
  return make(Tensor::vector({s}), {pred}, [target](Node& n) {
    Node& p = parent(n, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * 2.0 * (p.val()[i] - target[i]);
  }, "squared_error");
}

}  // namespace pwm::nn
