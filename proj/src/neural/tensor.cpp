#include "cantus/neural/tensor.hpp"

#include <string>
#include <unordered_set>
#include <utility>

#include "cantus/error.hpp"

namespace cantus::nn {

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "parameter";
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ValidationError("item() needs a 1x1 tensor");
  return node_->value(0, 0);
}

Tensor make_op(const char* op, Matrix value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward) {
  if (!value.allFinite()) {
    throw NumericalError(std::string("non-finite value produced by op '") + op + "'");
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw ValidationError("backward() needs a 1x1 root");
  if (!requires_grad()) return;

  // Iterative post-order DFS gives a topological order of the live graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->add_grad(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = **it;
    if (!n.backward || !n.has_grad()) continue;
    if (!n.grad.allFinite()) {
      throw NumericalError(std::string("non-finite gradient reaching op '") + n.op + "'");
    }
    n.backward(n);
  }
}

}  // namespace cantus::nn
