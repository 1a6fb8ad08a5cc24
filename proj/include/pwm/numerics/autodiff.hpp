#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pwm/numerics/tensor.hpp"

namespace pwm::nn {

// One value in the computation graph. Nodes that require gradients keep
// their parents and a backward closure; everything else is a plain value.
struct Node {
  Tensor value;
  // Non-null when the node aliases an external tensor (frozen parameters).
  const Tensor* external = nullptr;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  // Parameter leaves accumulate their gradient here on backward().
  Tensor* sink = nullptr;

  const Tensor& val() const { return external ? *external : value; }
  Tensor& ensure_grad();
};

// Handle to a graph node. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  // Read-only view of a tensor that outlives every use of the Var.
  static Var view(const Tensor& value);
  // Leaf whose gradient is accumulated into `grad_sink` by backward().
  static Var parameter(const Tensor& value, Tensor& grad_sink);

  const Tensor& value() const { return node_->val(); }
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }
  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Reverse pass from a scalar loss; fills every reachable parameter sink and
// releases the graph. Throws ContractError if the loss is not a scalar.
void backward(const Var& loss);

// Elementwise and structural ops. Binary elementwise ops require equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var sum(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
// Clamp with zero gradient outside [lo, hi].
Var clamp(const Var& a, double lo, double hi);
// Concatenate along the trailing dimension; all inputs share the row count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);

// y = x W^T + b, W [out, in], x [in] or [batch, in].
Var affine(const Var& x, const Var& w, const Var& b);

struct GruWeights {
  Var w_ih;  // [3H, in]
  Var w_hh;  // [3H, H]
  Var b_ih;  // [3H]
  Var b_hh;  // [3H]
};

// Standard GRU cell, gates in (reset, update, candidate) order:
//   r = sigma(W_ir x + b_ir + W_hr h + b_hr)
//   z = sigma(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
Var gru_step(const Var& x, const Var& h, const GruWeights& w);

// mean + exp(0.5 logvar) * noise
Var gaussian_sample(const Var& mean, const Var& logvar, const Tensor& noise);
// 0.5 * sum(exp(logvar) + mean^2 - 1 - logvar)
Var kl_to_standard_normal(const Var& mean, const Var& logvar);
// 0.5 * sum(logvar + (target - mean)^2 / exp(logvar) + ln 2pi)
Var gaussian_nll(const Var& mean, const Var& logvar, const Tensor& target);
// sum((pred - target)^2)
Var squared_error(const Var& pred, const Tensor& target);

}  // namespace pwm::nn
