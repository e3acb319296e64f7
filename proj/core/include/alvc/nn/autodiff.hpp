#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "alvc/nn/tensor.hpp"

namespace alvc::nn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Define-by-run reverse-mode graph node. The backward closure reads
// node.grad and accumulates into the parents' grads.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily during backward
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor(value.n(), value.c(), value.h(), value.w());
    return grad;
  }
};

// Value-semantics handle to a graph node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  // Leaf holding a constant (no gradient tracking).
  static Var constant(Tensor t);
  // Leaf that accumulates gradients (parameters, gradcheck probes).
  static Var leaf(Tensor t, bool requires_grad = true);

  // Accessors are const like a smart pointer's: they mutate the pointee,
  // not the handle.
  bool defined() const { return node_ != nullptr; }
  Tensor& value() const { return node_->value; }
  Tensor& grad() const { return node_->ensure_grad(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() const {
    if (!node_->grad.empty()) node_->grad.zero();
  }
  NodePtr node() const { return node_; }

  int n() const { return node_->value.n(); }
  int c() const { return node_->value.c(); }
  int h() const { return node_->value.h(); }
  int w() const { return node_->value.w(); }

  // Cuts the graph: returns a constant leaf sharing this node's value.
  Var detach() const { return Var::constant(node_->value); }

 private:
  NodePtr node_;
};

// Builds a node from parents; requires_grad is inherited.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse pass from a scalar (1,1,1,1) loss. Grads accumulate, so call
// zero_grad on parameters between steps.
void backward(const Var& loss);

}  // namespace alvc::nn
