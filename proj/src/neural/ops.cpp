#include "cantus/neural/ops.hpp"

#include <cmath>
#include <string>

#include "cantus/error.hpp"

namespace cantus::nn {

namespace {

enum class Bcast { same, row, scalar };

Bcast broadcast_kind(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::row;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::scalar;
  throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
}

Matrix expand(const Matrix& b, Bcast k, Eigen::Index rows, Eigen::Index cols) {
  switch (k) {
    case Bcast::same: return b;
    case Bcast::row: return b.replicate(rows, 1);
    case Bcast::scalar: return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

Matrix reduce(const Matrix& g, Bcast k) {
  switch (k) {
    case Bcast::same: return g;
    case Bcast::row: return g.colwise().sum();
    case Bcast::scalar: return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& a, F forward, D derivative) {
  Matrix v = a.value().unaryExpr(forward);
  return make_op(op, std::move(v), {a}, [derivative](Node& n) {
    Node& x = parent(n, 0);
    if (!x.requires_grad) return;
    x.add_grad(n.grad.cwiseProduct(derivative(x.value, n.value)));
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("add", a.value(), b.value());
  Matrix v = a.value() + expand(b.value(), k, a.rows(), a.cols());
  return make_op("add", std::move(v), {a, b}, [k](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).add_grad(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).add_grad(reduce(n.grad, k));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("sub", a.value(), b.value());
  Matrix v = a.value() - expand(b.value(), k, a.rows(), a.cols());
  return make_op("sub", std::move(v), {a, b}, [k](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).add_grad(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).add_grad(-reduce(n.grad, k));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("mul", a.value(), b.value());
  Matrix bx = expand(b.value(), k, a.rows(), a.cols());
  Matrix v = a.value().cwiseProduct(bx);
  return make_op("mul", std::move(v), {a, b}, [k, bx = std::move(bx)](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.add_grad(n.grad.cwiseProduct(bx));
    if (y.requires_grad) y.add_grad(reduce(n.grad.cwiseProduct(x.value), k));
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_op("scale", a.value() * s, {a}, [s](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).add_grad(n.grad * s);
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix v = a.value().array() + s;
  return make_op("add_scalar", std::move(v), {a}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).add_grad(n.grad);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  Matrix v = a.value() * b.value();
  return make_op("matmul", std::move(v), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& w = parent(n, 1);
    if (x.requires_grad) x.add_grad(n.grad * w.value.transpose());
    if (w.requires_grad) w.add_grad(x.value.transpose() * n.grad);
  });
}

Tensor tanh(const Tensor& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](const Matrix&, const Matrix& y) -> Matrix { return (1.0 - y.array().square()).matrix(); });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](const Matrix&, const Matrix& y) -> Matrix { return (y.array() * (1.0 - y.array())).matrix(); });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](const Matrix& x, const Matrix&) -> Matrix {
                 return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
               });
}

Tensor silu(const Tensor& a) {
  return unary("silu", a, [](double x) { return x / (1.0 + std::exp(-x)); },
               [](const Matrix& x, const Matrix&) -> Matrix {
                 return x.unaryExpr([](double v) {
                   const double s = 1.0 / (1.0 + std::exp(-v));
                   return s * (1.0 + v * (1.0 - s));
                 });
               });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); },
               [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Tensor log(const Tensor& a) {
  if ((a.value().array() <= 0.0).any()) throw NumericalError("log of a non-positive value");
  return unary("log", a, [](double x) { return std::log(x); },
               [](const Matrix& x, const Matrix&) -> Matrix { return x.cwiseInverse(); });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; },
               [](const Matrix& x, const Matrix&) -> Matrix { return 2.0 * x; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::abs(x); },
               [](const Matrix& x, const Matrix&) -> Matrix {
                 return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
               });
}

Tensor sum(const Tensor& a) {
  return make_op("sum", Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    if (x.requires_grad) x.add_grad(Matrix::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  const auto count = static_cast<double>(a.value().size());
  if (count == 0) throw ValidationError("mean of an empty tensor");
  return make_op("mean", Matrix::Constant(1, 1, a.value().sum() / count), {a}, [count](Node& n) {
    Node& x = parent(n, 0);
    if (x.requires_grad) {
      x.add_grad(Matrix::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0) / count));
    }
  });
}

Tensor row_sum(const Tensor& a) {
  Matrix v = a.value().rowwise().sum();
  return make_op("row_sum", std::move(v), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    if (x.requires_grad) x.add_grad(n.grad.replicate(1, x.value.cols()));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ValidationError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    offsets.push_back(off);
    off += p.cols();
  }
  return make_op("concat_cols", std::move(v), {parts.begin(), parts.end()},
                 [offsets](Node& n) {
                   for (std::size_t i = 0; i < n.parents.size(); ++i) {
                     Node& p = *n.parents[i];
                     if (p.requires_grad) p.add_grad(n.grad.middleCols(offsets[i], p.value.cols()));
                   }
                 });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ValidationError("slice_cols out of range");
  Matrix v = a.value().middleCols(start, count);
  return make_op("slice_cols", std::move(v), {a}, [start, count](Node& n) {
    Node& x = parent(n, 0);
    if (!x.requires_grad) return;
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleCols(start, count) = n.grad;
    x.add_grad(g);
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw ValidationError("slice_rows out of range");
  Matrix v = a.value().middleRows(start, count);
  return make_op("slice_rows", std::move(v), {a}, [start, count](Node& n) {
    Node& x = parent(n, 0);
    if (!x.requires_grad) return;
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleRows(start, count) = n.grad;
    x.add_grad(g);
  });
}

Tensor shift_rows(const Tensor& a, Eigen::Index offset) {
  const Eigen::Index rows = a.rows();
  Matrix v = Matrix::Zero(rows, a.cols());
  const Eigen::Index len = std::max<Eigen::Index>(0, rows - std::abs(offset));
  if (len > 0) {
    if (offset >= 0) {
      v.middleRows(offset, len) = a.value().topRows(len);
    } else {
      v.topRows(len) = a.value().middleRows(-offset, len);
    }
  }
  return make_op("shift_rows", std::move(v), {a}, [offset, len](Node& n) {
    Node& x = parent(n, 0);
    if (!x.requires_grad) return;
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    if (len > 0) {
      if (offset >= 0) {
        g.topRows(len) = n.grad.middleRows(offset, len);
      } else {
        g.middleRows(-offset, len) = n.grad.topRows(len);
      }
    }
    x.add_grad(g);
  });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  const Eigen::Index n_rows = table.rows();
  Matrix v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= n_rows) {
      throw ValidationError("embedding id " + std::to_string(ids[i]) + " outside table of " +
                            std::to_string(n_rows));
    }
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_op("embedding", std::move(v), {table}, [idx = std::move(idx)](Node& n) {
    Node& t = parent(n, 0);
    if (!t.requires_grad) return;
    Matrix g = Matrix::Zero(t.value.rows(), t.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    t.add_grad(g);
  });
}

Tensor log_softmax(const Tensor& a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    const double lse = m + std::log((v.row(r).array() - m).exp().sum());
    v.row(r).array() -= lse;
  }
  return make_op("log_softmax", std::move(v), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    if (!x.requires_grad) return;
    // d/dx = g - softmax * rowsum(g)
    const Matrix p = n.value.array().exp();
    const Matrix s = n.grad.rowwise().sum();
    x.add_grad(n.grad - (p.array().colwise() * s.col(0).array()).matrix());
  });
}

}  // namespace cantus::nn
