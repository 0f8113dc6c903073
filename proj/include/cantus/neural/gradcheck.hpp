#pragma once

#include <functional>
#include <random>
#include <string>

#include "cantus/neural/layers.hpp"

namespace cantus::nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "<name>[index]"
  int checked = 0;
};

/// Compares reverse-mode gradients of `loss` with central differences on up
/// to `coords_per_tensor` random coordinates of each tensor in `wrt`.
/// rel err = |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const std::function<Tensor()>& loss, const ParamList& wrt,
                           std::mt19937_64& rng, int coords_per_tensor = 6, double h = 1e-4);

}  // namespace cantus::nn
