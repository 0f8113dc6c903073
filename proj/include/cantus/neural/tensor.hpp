#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cantus/types.hpp"

namespace cantus::nn {

/// One vertex of the reverse-mode graph. Values are 2-D (frames x features);
/// scalars are 1x1.
struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows in
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;

  template <typename Derived>
  void add_grad(const Eigen::MatrixBase<Derived>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
  bool has_grad() const { return grad.size() != 0; }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Direct write access for optimizers and finite-difference probes on leaves.
  Matrix& mutable_value() const { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->has_grad(); }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;

  /// Reverse sweep from this 1x1 tensor. Gradients accumulate into leaves.
  void backward() const;
  void zero_grad() const { node_->grad.resize(0, 0); }
  Tensor detach() const { return constant(node_->value); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Creates a graph vertex. Throws NumericalError naming `op` if the value is
/// not finite. The backward function is dropped when no parent needs grad.
Tensor make_op(const char* op, Matrix value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward);

}  // namespace cantus::nn
