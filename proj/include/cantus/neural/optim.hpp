#pragma once

#include <cstdint>

#include "cantus/neural/layers.hpp"

namespace cantus::nn {

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double eps = 1e-8;
  void validate() const;
};

/// AdamW with decoupled decay applied before the moment update. Parameters
/// without a gradient this step are left untouched.
class AdamW {
 public:
  AdamW(ParamList params, AdamWConfig cfg);

  void step();
  void zero_grad() const;
  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }
  const AdamWConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const ParamList& params() const { return params_; }
  /// First and second moments as named tensors ("m/<name>", "v/<name>").
  ParamList state() const;

 private:
  ParamList params_;
  AdamWConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

}  // namespace cantus::nn
