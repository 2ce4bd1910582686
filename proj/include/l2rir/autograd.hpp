#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "l2rir/tensor.hpp"

namespace l2rir::nn {

struct Node;

// Propagates self.grad into the grads of self.inputs.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  Tensor& grad_buffer();
};

// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value, bool requires_grad = true);
  // Interior node. Records `backward` only when grad mode is on and some
  // input requires grad; otherwise the result is a constant.
  static Var from_op(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }

  // Empty tensor until a backward pass reaches this node.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Reverse sweep from a scalar root. Gradients accumulate into leaves.
void backward(const Var& root);

bool grad_enabled() noexcept;

// Scoped inference mode.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace l2rir::nn
