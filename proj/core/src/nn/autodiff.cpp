#include "alvc/nn/autodiff.hpp"

#include <stdexcept>
#include <unordered_set>

namespace alvc::nn {

Var Var::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = false;
  return Var(std::move(n));
}

Var Var::leaf(Tensor t, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (auto& p : parents) {
    if (p.node()->requires_grad) n->requires_grad = true;
    n->parents.push_back(p.node());
  }
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return Var(n);
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  // Iterative post-order topological sort over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad()[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace alvc::nn
