#include "cantus/neural/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cantus::nn {

GradCheckResult grad_check(const std::function<Tensor()>& loss, const ParamList& wrt,
                           std::mt19937_64& rng, int coords_per_tensor, double h) {
  for (const auto& [name, t] : wrt) t.zero_grad();
  loss().backward();
  std::vector<Matrix> analytic;
  for (const auto& [name, t] : wrt) {
    analytic.push_back(t.has_grad() ? t.grad() : Matrix::Zero(t.rows(), t.cols()));
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const auto& [name, t] = wrt[k];
    Matrix& v = t.mutable_value();
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(v.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(coords_per_tensor)));
    for (const Eigen::Index i : coords) {
      const double orig = v.data()[i];
      v.data()[i] = orig + h;
      const double up = loss().item();
      v.data()[i] = orig - h;
      const double down = loss().item();
      v.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k].data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++result.checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  for (const auto& [name, t] : wrt) t.zero_grad();
  return result;
}

}  // namespace cantus::nn
