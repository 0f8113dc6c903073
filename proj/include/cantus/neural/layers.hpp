#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cantus/neural/ops.hpp"

namespace cantus::nn {

using NamedTensor = std::pair<std::string, Tensor>;
using ParamList = std::vector<NamedTensor>;

class Module {
 public:
  virtual ~Module() = default;
  virtual void collect(const std::string& prefix, ParamList& out) const = 0;
  ParamList parameters() const {
    ParamList p;
    collect("", p);
    return p;
  }
};

/// y = x W + b with W (in x out). Uniform(-1/sqrt(in), 1/sqrt(in)) init.
class Linear : public Module {
 public:
  Linear() = default;
  Linear(int in, int out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const override;
  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }

  Tensor weight;
  Tensor bias;
};

/// Width-3 convolution over frames with zero "same" padding:
/// y[t] = [x[t-1], x[t], x[t+1]] W + b.
class Conv1d3 : public Module {
 public:
  Conv1d3() = default;
  Conv1d3(int in, int out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const override;

  Linear proj;
};

class Embedding : public Module {
 public:
  Embedding() = default;
  Embedding(int count, int dim, std::mt19937_64& rng);
  Tensor operator()(std::span<const int> ids) const;
  void collect(const std::string& prefix, ParamList& out) const override;
  int count() const { return static_cast<int>(table.rows()); }

  Tensor table;
};

/// tanh(first half of columns) * sigmoid(second half).
Tensor gated(const Tensor& x);

/// 1 x dim row [sin(s t f_i), cos(s t f_i)], f_i log-spaced from 1 to 1e-4,
/// s = 1000 so that t in [0, 1] spans the useful phase range.
Matrix sinusoidal_embedding(double t, int dim);

/// Sets every parameter to zero (used by tests and the zero-weight examples).
void zero_parameters(const ParamList& params);
/// Rounds every value to float precision in place.
void round_to_f32(const ParamList& params);
double grad_norm(const ParamList& params);

}  // namespace cantus::nn
