#include "cantus/neural/layers.hpp"

#include <array>
#include <cmath>

#include "cantus/error.hpp"
#include "cantus/io.hpp"

namespace cantus::nn {

namespace {

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

Linear::Linear(int in, int out, std::mt19937_64& rng) {
  if (in < 1 || out < 1) throw ValidationError("Linear dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = Tensor::parameter(uniform(in, out, bound, rng));
  bias = Tensor::parameter(uniform(1, out, bound, rng));
}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.cols() != weight.rows()) {
    throw ValidationError("Linear expects " + std::to_string(weight.rows()) + " input features, got " +
                          std::to_string(x.cols()));
  }
  return add(matmul(x, weight), bias);
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + "weight", weight);
  out.emplace_back(prefix + "bias", bias);
}

Conv1d3::Conv1d3(int in, int out, std::mt19937_64& rng) : proj(3 * in, out, rng) {}

Tensor Conv1d3::operator()(const Tensor& x) const {
  if (3 * x.cols() != proj.weight.rows()) {
    throw ValidationError("Conv1d3 expects " + std::to_string(proj.weight.rows() / 3) +
                          " input channels, got " + std::to_string(x.cols()));
  }
  const std::array<Tensor, 3> taps{shift_rows(x, 1), x, shift_rows(x, -1)};
  return proj(concat_cols(taps));
}

void Conv1d3::collect(const std::string& prefix, ParamList& out) const { proj.collect(prefix, out); }

Embedding::Embedding(int count, int dim, std::mt19937_64& rng) {
  if (count < 1 || dim < 1) throw ValidationError("Embedding dimensions must be positive");
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(count, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  table = Tensor::parameter(std::move(m));
}

Tensor Embedding::operator()(std::span<const int> ids) const { return embedding(table, ids); }

void Embedding::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + "table", table);
}

Tensor gated(const Tensor& x) {
  if (x.cols() % 2 != 0) throw ValidationError("gated activation needs an even channel count");
  const Eigen::Index half = x.cols() / 2;
  return mul(tanh(slice_cols(x, 0, half)), sigmoid(slice_cols(x, half, half)));
}

Matrix sinusoidal_embedding(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ValidationError("time embedding dim must be even and >= 2");
  const int half = dim / 2;
  Matrix e(1, dim);
  for (int i = 0; i < half; ++i) {
    const double f = half > 1 ? std::exp(-std::log(1e4) * i / (half - 1)) : 1.0;
    e(0, i) = std::sin(1000.0 * t * f);
    e(0, half + i) = std::cos(1000.0 * t * f);
  }
  return e;
}

void zero_parameters(const ParamList& params) {
  for (const auto& [name, p] : params) p.mutable_value().setZero();
}

void round_to_f32(const ParamList& params) {
  for (const auto& [name, p] : params) io::round_to_f32(p.mutable_value());
}

double grad_norm(const ParamList& params) {
  double s = 0.0;
  for (const auto& [name, p] : params) {
    if (p.has_grad()) s += p.grad().squaredNorm();
  }
  return std::sqrt(s);
}

}  // namespace cantus::nn
